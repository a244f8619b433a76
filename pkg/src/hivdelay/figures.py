"""Figure rendering for scenario reports.

PNG companions to the delimited output; matplotlib is imported lazily so
library use never pays for it.
"""

from __future__ import annotations

import numpy as np


def _pyplot():
    import matplotlib
    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt
    return plt


def render_simulation(traj, path: str) -> None:
    """Stacked x / y / z panels over the run horizon."""
    plt = _pyplot()
    t = traj.grid.times()
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(7.0, 7.5))
    for ax, idx, label in zip(axes, range(3), ("x (uninfected)", "y (infected)", "z (CTL)")):
        ax.plot(t, traj.samples[:, idx], lw=1.2)
        ax.set_ylabel(f"{label} [cells]")
        ax.grid(alpha=0.3)
    axes[-1].set_xlabel("t [days]")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_ocp(sol, path: str) -> None:
    """States, bang-bang control, switching function, and adjoints."""
    plt = _pyplot()
    grid = sol.states.grid
    t = grid.times()
    t_int = t[:-1]
    fig, axes = plt.subplots(2, 2, figsize=(10.0, 7.0))

    ax = axes[0, 0]
    for idx, label in enumerate(("x", "y", "z")):
        ax.plot(t, sol.states.samples[:, idx], lw=1.2, label=label)
    ax.set_xlabel("t [days]")
    ax.set_ylabel("cells")
    ax.legend()
    ax.grid(alpha=0.3)

    ax = axes[0, 1]
    ax.step(t_int, sol.control, where="post", lw=1.2)
    ax.set_xlabel("t [days]")
    ax.set_ylabel("u")
    ax.set_ylim(-0.05, 1.05)
    ax.grid(alpha=0.3)

    ax = axes[1, 0]
    ax.step(t_int, sol.phi, where="post", lw=1.0)
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set_xlabel("t [days]")
    ax.set_ylabel("switching function")
    ax.grid(alpha=0.3)

    ax = axes[1, 1]
    for idx, label in enumerate(("lx", "ly", "lz")):
        ax.plot(t, sol.adjoints[:, idx], lw=1.0, label=label)
    ax.set_xlabel("t [days]")
    ax.set_ylabel("adjoints")
    ax.legend()
    ax.grid(alpha=0.3)

    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_sweep(variable: str, columns: list, path: str) -> None:
    """Numeric summary columns against the swept variable."""
    plt = _pyplot()
    named = dict(columns)
    values = np.asarray(named["value"], dtype=float)
    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    for name, data in columns:
        if name == "value":
            continue
        try:
            series = np.asarray([np.nan if v is None else float(v) for v in data], dtype=float)
        except (TypeError, ValueError):
            continue
        ax.plot(values, series, marker="o", ms=3, lw=1.0, label=name)
    ax.set_xlabel(variable)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
