"""Config-driven scenario runner and deterministic export.

Configs are flat UTF-8 ``key = value`` text with '#' comments and dotted
keys for nesting.  A run dispatches on the mode (simulate, equilibria,
stability, ocp, sweep), writes CSV or JSON data with fixed float
formatting (17 significant digits, LF endings), and optionally renders
companion figures next to the data.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .control import OcpConfig, fbsm_solve
from .dde import GridConfig, HistorySpec, IntegrationError, Trajectory, integrate
from .model import ModelParams, equilibria, thresholds, uncontrolled_field
from .stability import classify_E0, classify_E1, classify_E2_at_tau, crossing_sextic_E2, routh_hurwitz_E2

__all__ = [
    "MODES",
    "ConfigError",
    "ScenarioConfig",
    "RunReport",
    "load_config",
    "run",
    "settling_time",
    "flatten_config",
]

MODES = ("simulate", "equilibria", "stability", "ocp", "sweep")
SWEEP_TARGETS = ("stability", "simulate")
SWEEP_VARIABLES = ("lambda", "d", "beta", "a", "p", "c", "h", "tau")

# ε for the settling-time metric: first time after which the trajectory
# stays within this sup-norm distance of the target through tf
SETTLE_EPS = 0.05


class ConfigError(ValueError):
    """Bad or missing configuration; messages carry key names and lines."""


@dataclass
class ScenarioConfig:
    """Fully resolved scenario description (defaults already applied)."""

    mode: str
    params: ModelParams
    tau: float = 0.0
    xi: float = 0.0
    t0: float = 0.0
    tf: float = 500.0
    step: float = 0.05
    history: HistorySpec = field(default_factory=lambda: HistorySpec(5.0, 1.0, 2.0, 0.0))
    max_iterations: int = 500
    relaxation: float = 0.3
    convergence_tol: float = 1e-4
    switch_band: float = 1e-6
    s_max: float = 50.0
    n_samples: int = 5000
    sweep_variable: str | None = None
    sweep_start: float | None = None
    sweep_stop: float | None = None
    sweep_count: int | None = None
    sweep_target: str = "stability"
    out_path: str | None = None
    out_format: str = "csv"
    figures: bool = True


@dataclass
class RunReport:
    """What a run resolved to, produced, and concluded."""

    config: list            # (key, formatted value) pairs, canonical order
    outputs: list           # file paths written
    duration_seconds: float
    summary: dict


# ── flat key = value parsing ─────────────────────────────────────────────────

def _parse_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ValueError(f"could not parse {text!r} as a number")
    if not np.isfinite(value):
        raise ValueError(f"number must be finite, got {text!r}")
    return value


def _parse_int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ValueError(f"could not parse {text!r} as an integer")


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"could not parse {text!r} as a boolean")


def _parse_choice(choices):
    def parse(text: str) -> str:
        if text not in choices:
            raise ValueError(f"expected one of {', '.join(choices)}, got {text!r}")
        return text
    return parse


_PARAM_KEYS = ("params.lambda", "params.d", "params.beta", "params.a",
               "params.p", "params.c", "params.h")

_KEY_PARSERS = {
    "mode": _parse_choice(MODES),
    **{k: _parse_float for k in _PARAM_KEYS},
    "delays.tau": _parse_float,
    "delays.xi": _parse_float,
    "grid.t0": _parse_float,
    "grid.tf": _parse_float,
    "grid.step": _parse_float,
    "history.x0": _parse_float,
    "history.y0": _parse_float,
    "history.z0": _parse_float,
    "history.u0": _parse_float,
    "ocp.max_iterations": _parse_int,
    "ocp.relaxation": _parse_float,
    "ocp.convergence_tol": _parse_float,
    "ocp.switch_band": _parse_float,
    "stability.s_max": _parse_float,
    "stability.n_samples": _parse_int,
    "sweep.variable": _parse_choice(SWEEP_VARIABLES),
    "sweep.start": _parse_float,
    "sweep.stop": _parse_float,
    "sweep.count": _parse_int,
    "sweep.target": _parse_choice(SWEEP_TARGETS),
    "output.path": str,
    "output.format": _parse_choice(("csv", "json")),
    "output.figures": _parse_bool,
}


def _read_entries(path) -> dict:
    """Parse the flat file into {key: (raw value, line number)}; last wins."""
    entries = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KEY_PARSERS:
            raise ConfigError(f"unknown key '{key}' on line {lineno}")
        entries[key] = (value, lineno)
    return entries


def load_config(path, mode: str | None = None) -> ScenarioConfig:
    """Load and validate a scenario config, applying per-mode defaults.

    ``mode`` overrides the file's mode key (the CLI passes its positional
    argument here).  Raises ConfigError with the offending key and line.
    """
    entries = _read_entries(path)

    parsed = {}
    for key, (raw, lineno) in entries.items():
        try:
            parsed[key] = _KEY_PARSERS[key](raw)
        except ValueError as exc:
            raise ConfigError(f"key '{key}' on line {lineno}: {exc}") from None

    resolved_mode = mode or parsed.get("mode")
    if resolved_mode is None:
        raise ConfigError(f"missing required key 'mode' in {path}")
    if resolved_mode not in MODES:
        raise ConfigError(f"unknown mode {resolved_mode!r}")

    missing = [k for k in _PARAM_KEYS if k not in parsed]
    if missing:
        raise ConfigError(f"missing required key(s) {', '.join(repr(k) for k in missing)} in {path}")
    try:
        params = ModelParams(
            lambda_src=parsed["params.lambda"], d=parsed["params.d"], beta=parsed["params.beta"],
            a=parsed["params.a"], p=parsed["params.p"], c=parsed["params.c"], h=parsed["params.h"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    is_ocp = resolved_mode == "ocp"
    step = parsed.get("grid.step", 0.01 if is_ocp else 0.05)
    tf = parsed.get("grid.tf", 10.0 if is_ocp else 500.0)
    t0 = parsed.get("grid.t0", 0.0)
    tau = parsed.get("delays.tau", 0.0)
    xi = parsed.get("delays.xi", 0.0)

    try:
        history = HistorySpec(
            parsed.get("history.x0", 5.0), parsed.get("history.y0", 1.0),
            parsed.get("history.z0", 2.0), parsed.get("history.u0", 0.0),
        )
    except ValueError as exc:
        raise ConfigError(f"history: {exc}") from None

    config = ScenarioConfig(
        mode=resolved_mode,
        params=params,
        tau=tau,
        xi=xi,
        t0=t0,
        tf=tf,
        step=step,
        history=history,
        max_iterations=parsed.get("ocp.max_iterations", 500),
        relaxation=parsed.get("ocp.relaxation", 0.3),
        convergence_tol=parsed.get("ocp.convergence_tol", 1e-4),
        switch_band=parsed.get("ocp.switch_band", 1e-6),
        s_max=parsed.get("stability.s_max", 50.0),
        n_samples=parsed.get("stability.n_samples", 5000),
        sweep_variable=parsed.get("sweep.variable"),
        sweep_start=parsed.get("sweep.start"),
        sweep_stop=parsed.get("sweep.stop"),
        sweep_count=parsed.get("sweep.count"),
        sweep_target=parsed.get("sweep.target", "stability"),
        out_path=parsed.get("output.path"),
        out_format=parsed.get("output.format", "csv"),
        figures=parsed.get("output.figures", True),
    )
    _validate(config, entries, path)
    return config


def _entry_line(entries: dict, key: str) -> str:
    if key in entries:
        return f"'{key}' on line {entries[key][1]}"
    return f"'{key}' (default)"


def _validate(config: ScenarioConfig, entries: dict, path) -> None:
    try:
        GridConfig(config.t0, config.tf, config.step)
    except ValueError as exc:
        raise ConfigError(f"grid ({_entry_line(entries, 'grid.step')}): {exc}") from None
    for key, delay in (("delays.tau", config.tau), ("delays.xi", config.xi)):
        if delay < 0.0:
            raise ConfigError(f"{_entry_line(entries, key)}: delay must be nonnegative")
        count = round(delay / config.step) if delay else 0
        if abs(count * config.step - delay) > 1e-9 * max(1.0, abs(delay)):
            raise ConfigError(
                f"{_entry_line(entries, key)}: delay not an integer multiple of step "
                f"(delay={delay!r}, step={config.step!r})")
    if config.mode == "ocp":
        horizon = config.tf - config.t0
        if not (horizon > config.tau and horizon > config.xi):
            raise ConfigError(f"ocp horizon must exceed both delays ({_entry_line(entries, 'grid.tf')})")
        if not 0.0 < config.relaxation <= 1.0:
            raise ConfigError(f"{_entry_line(entries, 'ocp.relaxation')}: must lie in (0, 1]")
    if config.mode == "sweep":
        for key, value in (("sweep.variable", config.sweep_variable),
                           ("sweep.start", config.sweep_start),
                           ("sweep.stop", config.sweep_stop),
                           ("sweep.count", config.sweep_count)):
            if value is None:
                raise ConfigError(f"missing required key '{key}' for mode sweep in {path}")
        if config.sweep_count < 2:
            raise ConfigError(f"{_entry_line(entries, 'sweep.count')}: need at least 2 points")


def flatten_config(config: ScenarioConfig) -> list:
    """(key, formatted value) pairs in canonical order; the config echo."""
    p = config.params
    pairs = [
        ("mode", config.mode),
        ("params.lambda", _fmt_float(p.lambda_src)),
        ("params.d", _fmt_float(p.d)),
        ("params.beta", _fmt_float(p.beta)),
        ("params.a", _fmt_float(p.a)),
        ("params.p", _fmt_float(p.p)),
        ("params.c", _fmt_float(p.c)),
        ("params.h", _fmt_float(p.h)),
        ("delays.tau", _fmt_float(config.tau)),
        ("delays.xi", _fmt_float(config.xi)),
        ("grid.t0", _fmt_float(config.t0)),
        ("grid.tf", _fmt_float(config.tf)),
        ("grid.step", _fmt_float(config.step)),
        ("history.x0", _fmt_float(config.history.x0)),
        ("history.y0", _fmt_float(config.history.y0)),
        ("history.z0", _fmt_float(config.history.z0)),
        ("history.u0", _fmt_float(config.history.u0)),
        ("ocp.max_iterations", str(config.max_iterations)),
        ("ocp.relaxation", _fmt_float(config.relaxation)),
        ("ocp.convergence_tol", _fmt_float(config.convergence_tol)),
        ("ocp.switch_band", _fmt_float(config.switch_band)),
        ("stability.s_max", _fmt_float(config.s_max)),
        ("stability.n_samples", str(config.n_samples)),
    ]
    if config.mode == "sweep":
        pairs += [
            ("sweep.variable", config.sweep_variable),
            ("sweep.start", _fmt_float(config.sweep_start)),
            ("sweep.stop", _fmt_float(config.sweep_stop)),
            ("sweep.count", str(config.sweep_count)),
            ("sweep.target", config.sweep_target),
        ]
    pairs += [
        ("output.path", config.out_path or _default_out_path(config)),
        ("output.format", config.out_format),
        ("output.figures", "true" if config.figures else "false"),
    ]
    return pairs


# ── deterministic formatting and writers ─────────────────────────────────────

def _fmt_float(value) -> str:
    return f"{float(value):.17g}"


def _fmt_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return _fmt_float(value)


def _json_fragment(value, indent: int, out: list) -> None:
    pad = "  " * indent
    if value is None:
        out.append("null")
    elif isinstance(value, bool):
        out.append("true" if value else "false")
    elif isinstance(value, str):
        out.append(json.dumps(value))
    elif isinstance(value, (int, np.integer)):
        out.append(str(int(value)))
    elif isinstance(value, (float, np.floating)):
        out.append(_fmt_float(value) if np.isfinite(value) else "null")
    elif isinstance(value, dict):
        if not value:
            out.append("{}")
            return
        out.append("{\n")
        items = list(value.items())
        for i, (k, v) in enumerate(items):
            out.append(pad + "  " + json.dumps(str(k)) + ": ")
            _json_fragment(v, indent + 1, out)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(value, (list, tuple, np.ndarray)):
        seq = list(value)
        if not seq:
            out.append("[]")
            return
        out.append("[")
        for i, v in enumerate(seq):
            _json_fragment(v, indent + 1, out)
            if i < len(seq) - 1:
                out.append(", ")
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(value)!r}")


def _json_dumps(obj) -> str:
    out: list = []
    _json_fragment(obj, 0, out)
    out.append("\n")
    return "".join(out)


def _write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_csv(path, columns: list) -> None:
    names = [name for name, _ in columns]
    length = len(columns[0][1]) if columns else 0
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for i in range(length):
        writer.writerow([_fmt_cell(values[i]) for _, values in columns])
    _write_text(path, buf.getvalue())


def _write_json_report(path, columns: list, summary: dict) -> None:
    obj = {name: list(values) for name, values in columns}
    obj["summary"] = summary
    _write_text(path, _json_dumps(obj))


# ── mode runners ─────────────────────────────────────────────────────────────

def settling_time(traj: Trajectory, point, eps: float = SETTLE_EPS):
    """First time after which the trajectory stays within eps (sup norm) of
    ``point`` through tf; None if it never does."""
    target = np.asarray(point, dtype=float)
    dist = np.max(np.abs(traj.samples - target), axis=1)
    bad = np.nonzero(dist > eps)[0]
    if len(bad) == 0:
        return float(traj.grid.t0)
    last = int(bad[-1])
    if last == traj.grid.n_steps:
        return None
    return float(traj.grid.t0 + traj.grid.step * (last + 1))


def _simulate_once(config: ScenarioConfig):
    grid = GridConfig.from_delays(config.t0, config.tf, config.step, config.tau)
    traj = integrate(uncontrolled_field(config.params), config.history, grid)
    final = traj.samples[-1]
    candidates = [e for e in equilibria(config.params) if e.admissible]
    target = min(candidates, key=lambda e: float(np.max(np.abs(final - np.asarray(e.point)))))
    return traj, target, settling_time(traj, target.point)


def _run_simulate(config: ScenarioConfig):
    traj, target, settle = _simulate_once(config)
    times = traj.grid.times()
    columns = [
        ("t", [float(t) for t in times]),
        ("x", [float(v) for v in traj.samples[:, 0]]),
        ("y", [float(v) for v in traj.samples[:, 1]]),
        ("z", [float(v) for v in traj.samples[:, 2]]),
    ]
    summary = {
        "final_x": float(traj.samples[-1, 0]),
        "final_y": float(traj.samples[-1, 1]),
        "final_z": float(traj.samples[-1, 2]),
        "target_kind": target.kind,
        "target_x": float(target.point.x),
        "target_y": float(target.point.y),
        "target_z": float(target.point.z),
        "settling_time": settle,
    }

    def render(path):
        from . import figures
        figures.render_simulation(traj, path)

    return columns, summary, render


def _run_equilibria(config: ScenarioConfig):
    t = thresholds(config.params)
    rows = equilibria(config.params)
    columns = [
        ("kind", [e.kind for e in rows]),
        ("x", [float(e.point.x) for e in rows]),
        ("y", [float(e.point.y) for e in rows]),
        ("z", [float(e.point.z) for e in rows]),
        ("admissible", [e.admissible for e in rows]),
        ("t1", [t.t1] * len(rows)),
        ("t2", [t.t2] * len(rows)),
        ("t3", [t.t3] * len(rows)),
    ]
    summary = {
        "t1": t.t1,
        "t2": t.t2,
        "t3": t.t3,
        "admissible": ",".join(e.kind for e in rows if e.admissible),
    }
    return columns, summary, None


_EVIDENCE_COLUMNS = (
    ("crossing_w2", "E0"), ("D", "E2"), ("E", "E2"), ("F", "E2"), ("DE_minus_F", "E2"),
    ("Q", "E2"), ("R", "E2"), ("S", "E2"), ("T", "E2"), ("q0", "E2"), ("min_q_prime", "E2"),
)


def _run_stability(config: ScenarioConfig):
    params = config.params
    t = thresholds(params)
    verdicts = {
        "E0": classify_E0(params),
        "E1": classify_E1(params),
        "E2": classify_E2_at_tau(params, config.tau, config.s_max, config.n_samples),
    }
    evidence = {"E0": dict(verdicts["E0"].evidence), "E1": {}, "E2": dict(verdicts["E2"].evidence)}
    if t.t2 > 0.0:
        rh = routh_hurwitz_E2(params)
        evidence["E2"].update({"D": rh.D, "E": rh.E, "F": rh.F, "DE_minus_F": rh.DE_minus_F})
        sx = crossing_sextic_E2(params)
        evidence["E2"].update({"Q": sx.Q, "R": sx.R, "S": sx.S, "T": sx.T})

    kinds = ("E0", "E1", "E2")
    columns = [
        ("equilibrium", list(kinds)),
        ("tau", [config.tau] * 3),
        ("verdict", [verdicts[k].verdict.value for k in kinds]),
        ("rationale", [verdicts[k].rationale for k in kinds]),
        ("t1", [t.t1] * 3),
        ("t2", [t.t2] * 3),
        ("t3", [t.t3] * 3),
    ]
    for name, owner in _EVIDENCE_COLUMNS:
        columns.append((name, [evidence[k].get(name) if k == owner else None for k in kinds]))
    summary = {"tau": config.tau, **{k: verdicts[k].verdict.value for k in kinds}}
    return columns, summary, None


def _run_ocp(config: ScenarioConfig):
    grid = GridConfig.from_delays(config.t0, config.tf, config.step, config.tau, config.xi)
    ocp = OcpConfig(
        params=config.params, grid=grid, history=config.history,
        max_iterations=config.max_iterations, relaxation=config.relaxation,
        convergence_tol=config.convergence_tol, switch_band=config.switch_band,
    )
    sol = fbsm_solve(ocp)
    times = grid.times()
    # control and phi live on intervals; the final row repeats the last one
    u_col = np.append(sol.control, sol.control[-1])
    phi_col = np.append(sol.phi, sol.phi[-1])
    columns = [
        ("t", [float(v) for v in times]),
        ("x", [float(v) for v in sol.states.samples[:, 0]]),
        ("y", [float(v) for v in sol.states.samples[:, 1]]),
        ("z", [float(v) for v in sol.states.samples[:, 2]]),
        ("u", [float(v) for v in u_col]),
        ("phi", [float(v) for v in phi_col]),
        ("lx", [float(v) for v in sol.adjoints[:, 0]]),
        ("ly", [float(v) for v in sol.adjoints[:, 1]]),
        ("lz", [float(v) for v in sol.adjoints[:, 2]]),
    ]
    summary = {
        "objective": sol.objective,
        "converged": sol.converged,
        "iterations": sol.iterations,
        "bang_residual": sol.bang_residual,
        "relaxed_residual": sol.relaxed_residual,
        "switch_count": len(sol.switch_times),
        "switch_times": list(sol.switch_times),
    }

    def render(path):
        from . import figures
        figures.render_ocp(sol, path)

    return columns, summary, render


def _sweep_values(config: ScenarioConfig) -> np.ndarray:
    return np.linspace(config.sweep_start, config.sweep_stop, config.sweep_count)


def _with_variable(config: ScenarioConfig, value: float) -> ScenarioConfig:
    name = config.sweep_variable
    if name == "tau":
        return replace(config, tau=float(value))
    attr = "lambda_src" if name == "lambda" else name
    try:
        params = replace(config.params, **{attr: float(value)})
    except ValueError as exc:
        raise ConfigError(f"sweep value {value!r} for '{name}': {exc}") from None
    return replace(config, params=params)


def _run_sweep(config: ScenarioConfig):
    values = _sweep_values(config)
    rows = []
    for value in values:
        point = _with_variable(config, float(value))
        if config.sweep_target == "stability":
            t = thresholds(point.params)
            e0 = classify_E0(point.params)
            e1 = classify_E1(point.params)
            e2 = classify_E2_at_tau(point.params, point.tau, point.s_max, point.n_samples)
            rows.append({
                "value": float(value), "t1": t.t1, "t2": t.t2, "t3": t.t3,
                "verdict_E0": e0.verdict.value, "verdict_E1": e1.verdict.value,
                "verdict_E2": e2.verdict.value,
            })
        else:
            try:
                traj, target, settle = _simulate_once(point)
            except ValueError as exc:
                raise ConfigError(f"sweep value {value!r}: {exc}") from None
            rows.append({
                "value": float(value),
                "final_x": float(traj.samples[-1, 0]),
                "final_y": float(traj.samples[-1, 1]),
                "final_z": float(traj.samples[-1, 2]),
                "settling_time": settle,
                "target_kind": target.kind,
            })
    names = list(rows[0].keys())
    columns = [(name, [row[name] for row in rows]) for name in names]
    summary = {"variable": config.sweep_variable, "target": config.sweep_target}

    def render(path):
        from . import figures
        figures.render_sweep(config.sweep_variable, columns, path)

    return columns, summary, render


_RUNNERS = {
    "simulate": _run_simulate,
    "equilibria": _run_equilibria,
    "stability": _run_stability,
    "ocp": _run_ocp,
    "sweep": _run_sweep,
}

# modes whose summary carries numbers that are not plain table cells
_SIDECAR_MODES = ("simulate", "ocp")


def _default_out_path(config: ScenarioConfig) -> str:
    return f"{config.mode}_output.{config.out_format}"


def run(config: ScenarioConfig) -> RunReport:
    """Execute the scenario and write its outputs; returns the run report."""
    start = time.perf_counter()
    try:
        columns, summary, render = _RUNNERS[config.mode](config)
    except IntegrationError as exc:
        raise IntegrationError(f"scenario '{config.mode}': {exc}", exc.t) from exc
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"scenario '{config.mode}': {exc}") from None

    out_path = Path(config.out_path or _default_out_path(config))
    if out_path.parent and not out_path.parent.exists():
        out_path.parent.mkdir(parents=True, exist_ok=True)
    outputs = []
    if config.out_format == "json":
        _write_json_report(out_path, columns, summary)
        outputs.append(str(out_path))
    else:
        _write_csv(out_path, columns)
        outputs.append(str(out_path))
        if config.mode in _SIDECAR_MODES:
            sidecar = out_path.with_name(out_path.stem + "_summary.json")
            _write_text(sidecar, _json_dumps(summary))
            outputs.append(str(sidecar))
    if config.figures and render is not None:
        fig_path = out_path.with_suffix(".png")
        render(str(fig_path))
        outputs.append(str(fig_path))

    return RunReport(
        config=flatten_config(config),
        outputs=outputs,
        duration_seconds=time.perf_counter() - start,
        summary=summary,
    )
