"""Command-line interface: run one scenario per invocation.

Exit codes: 0 success, 1 config error, 2 numerical failure,
3 OCP non-convergence (data is still written).
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .dde import IntegrationError
from .scenario import MODES, ConfigError, flatten_config, load_config, run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hivdelay",
        description="Delayed within-host HIV model: simulation, equilibrium and "
                    "stability reports, and delayed optimal control of treatment.",
    )
    parser.add_argument("mode", choices=MODES, help="scenario to run")
    parser.add_argument("--config", required=True, metavar="PATH", help="flat key = value config file")
    parser.add_argument("--out", metavar="PATH", help="output data file (default <mode>_output.<format>)")
    parser.add_argument("--format", choices=("csv", "json"), help="output format (default csv)")
    parser.add_argument("--print-config", action="store_true", help="echo the resolved config and exit")
    parser.add_argument("--no-figures", action="store_true", help="skip rendering companion figures")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, mode=args.mode)
    except (OSError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    if args.format:
        config.out_format = args.format
        if config.out_path is None and args.out is None:
            pass  # default path picks up the format on its own
    if args.out:
        config.out_path = args.out
    if args.no_figures:
        config.figures = False

    if args.print_config:
        for key, value in flatten_config(config):
            print(f"{key} = {value}")
        return 0

    try:
        report = run(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (IntegrationError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2

    for path in report.outputs:
        print(f"wrote {path}")
    for key, value in report.summary.items():
        print(f"{key}: {value}")
    print(f"done in {report.duration_seconds:.3f} s")
    if config.mode == "ocp" and not report.summary.get("converged", True):
        print("warning: sweep did not converge within max_iterations", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
