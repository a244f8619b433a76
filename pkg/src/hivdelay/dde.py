"""Fixed-step method-of-steps integrator for the delayed system.

Classical 4-stage Runge-Kutta advances each step.  Delays must be integer
multiples of the step, so delayed reads at step endpoints hit stored nodes
exactly; reads at interior stage times use cubic Hermite interpolation of
the stored solution (values plus right-hand-side derivatives).  Histories
are constant, controls are piecewise constant per step interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "IntegrationError",
    "HistorySpec",
    "GridConfig",
    "Trajectory",
    "integrate",
    "sample",
]

# relative slack for deciding that a time sits on a grid node
_NODE_TOL = 1e-9


class IntegrationError(RuntimeError):
    """State or adjoint stopped being finite at time ``t``."""

    def __init__(self, message: str, t: float):
        super().__init__(message)
        self.t = t


@dataclass(frozen=True)
class HistorySpec:
    """Constant pre-history: x, y on [-tau, 0], z at 0, control u on [-xi, 0)."""

    x0: float
    y0: float
    z0: float
    u0: float = 0.0

    def __post_init__(self) -> None:
        if self.x0 < 0.0 or self.y0 < 0.0 or self.z0 < 0.0:
            raise ValueError("history values x0, y0, z0 must be nonnegative")
        if not 0.0 <= self.u0 <= 1.0:
            raise ValueError(f"control history u0 must lie in [0, 1], got {self.u0!r}")

    def state(self) -> np.ndarray:
        return np.array([self.x0, self.y0, self.z0], dtype=float)


@dataclass(frozen=True)
class GridConfig:
    """Uniform time grid; delays are stored as step counts, never as floats."""

    t0: float
    tf: float
    step: float
    tau_steps: int = 0
    xi_steps: int = 0

    def __post_init__(self) -> None:
        if not self.step > 0.0:
            raise ValueError(f"step must be positive, got {self.step!r}")
        if not self.tf > self.t0:
            raise ValueError(f"need tf > t0, got t0={self.t0!r}, tf={self.tf!r}")
        ratio = (self.tf - self.t0) / self.step
        if abs(ratio - round(ratio)) > _NODE_TOL * max(1.0, ratio):
            raise ValueError(f"(tf - t0)/step = {ratio!r} is not an integer")
        for name in ("tau_steps", "xi_steps"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0:
                raise ValueError(f"{name} must be a nonnegative integer, got {value!r}")

    @property
    def n_steps(self) -> int:
        return round((self.tf - self.t0) / self.step)

    @property
    def tau(self) -> float:
        return self.tau_steps * self.step

    @property
    def xi(self) -> float:
        return self.xi_steps * self.step

    def times(self) -> np.ndarray:
        return self.t0 + self.step * np.arange(self.n_steps + 1)

    @classmethod
    def from_delays(cls, t0: float, tf: float, step: float, tau: float = 0.0, xi: float = 0.0) -> "GridConfig":
        """Build a grid, rejecting delays that do not divide into steps."""
        counts = []
        for name, delay in (("tau", tau), ("xi", xi)):
            if delay < 0.0:
                raise ValueError(f"{name} must be nonnegative, got {delay!r}")
            k = round(delay / step) if delay else 0
            if abs(k * step - delay) > _NODE_TOL * max(1.0, abs(delay)):
                raise ValueError(f"delay not an integer multiple of step: {name}={delay!r}, step={step!r}")
            counts.append(k)
        return cls(t0, tf, step, counts[0], counts[1])


@dataclass
class Trajectory:
    """Solution samples on the grid plus node derivatives for dense output.

    Immutable by convention once built; ``derivs`` holds the right-hand
    side at each node and powers the cubic Hermite interpolation.
    """

    grid: GridConfig
    samples: np.ndarray   # (n_steps + 1, 3)
    derivs: np.ndarray    # (n_steps + 1, 3)
    history: HistorySpec

    def final_state(self) -> np.ndarray:
        return self.samples[-1].copy()


def _hermite(theta: float, h: float, y0, y1, m0, m1):
    t2 = theta * theta
    t3 = t2 * theta
    return (
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - 2.0 * t2 + theta) * h * m0
        + (t3 - t2) * h * m1
    )


def _segment_midpoint(y: np.ndarray, f: np.ndarray, i: int, h: float) -> np.ndarray:
    # Hermite basis at theta = 1/2 collapses to this two-term form.
    return 0.5 * (y[i] + y[i + 1]) + 0.125 * h * (f[i] - f[i + 1])


def integrate(rhs, history: HistorySpec, grid: GridConfig, control=None) -> Trajectory:
    """Integrate ``y' = rhs(y, y(t - tau), u(t - xi))`` over the grid.

    ``rhs`` maps (state, delayed state, delayed control) to the derivative;
    any length-3 sequence return is accepted.  ``control``, if given, holds
    one value per step interval; ``history.u0`` covers times before t0.
    With ``tau_steps == 0`` the delayed argument is the current stage state,
    so the scheme collapses to a plain non-delayed RK4.

    The hot loop works on float triples; long stiff transients need fine
    steps, so per-step overhead matters.
    """
    n = grid.n_steps
    h = grid.step
    m = grid.tau_steps
    q = grid.xi_steps
    u_grid = None
    if control is not None:
        u_grid = [float(v) for v in np.asarray(control, dtype=float)]
        if len(u_grid) != n:
            raise ValueError(f"control grid must have one value per step interval ({n}), got {len(u_grid)}")

    hist = (history.x0, history.y0, history.z0)
    u0 = history.u0
    nodes = [hist]           # float triples per node
    ders = []                # rhs at each node, appended as steps complete

    half = 0.5 * h
    sixth = h / 6.0
    yk = hist
    for k in range(n):
        if u_grid is None:
            u = u0
        else:
            j = k - q
            u = u0 if j < 0 else u_grid[j]
        a0, a1, a2 = yk
        if m == 0:
            k1 = rhs(yk, yk, u)
            ders.append((k1[0], k1[1], k1[2]))
            s2 = (a0 + half * k1[0], a1 + half * k1[1], a2 + half * k1[2])
            k2 = rhs(s2, s2, u)
            s3 = (a0 + half * k2[0], a1 + half * k2[1], a2 + half * k2[2])
            k3 = rhs(s3, s3, u)
            s4 = (a0 + h * k3[0], a1 + h * k3[1], a2 + h * k3[2])
            k4 = rhs(s4, s4, u)
        else:
            i = k - m
            lag0 = hist if i < 0 else nodes[i]
            k1 = rhs(yk, lag0, u)
            ders.append((k1[0], k1[1], k1[2]))
            # midpoint of segment [k-m, k-m+1]; needs ders[k] when m == 1
            if i < 0:
                lag_mid = hist
                lag1 = hist if i + 1 < 0 else nodes[i + 1]
            else:
                b, e = nodes[i], nodes[i + 1]
                db, de = ders[i], ders[i + 1]
                lag_mid = (
                    0.5 * (b[0] + e[0]) + 0.125 * h * (db[0] - de[0]),
                    0.5 * (b[1] + e[1]) + 0.125 * h * (db[1] - de[1]),
                    0.5 * (b[2] + e[2]) + 0.125 * h * (db[2] - de[2]),
                )
                lag1 = e
            k2 = rhs((a0 + half * k1[0], a1 + half * k1[1], a2 + half * k1[2]), lag_mid, u)
            k3 = rhs((a0 + half * k2[0], a1 + half * k2[1], a2 + half * k2[2]), lag_mid, u)
            k4 = rhs((a0 + h * k3[0], a1 + h * k3[1], a2 + h * k3[2]), lag1, u)
        yk = (
            a0 + sixth * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0]),
            a1 + sixth * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1]),
            a2 + sixth * (k1[2] + 2.0 * (k2[2] + k3[2]) + k4[2]),
        )
        if not (math.isfinite(yk[0]) and math.isfinite(yk[1]) and math.isfinite(yk[2])):
            t_bad = grid.t0 + (k + 1) * h
            raise IntegrationError(f"state became non-finite at t = {t_bad}", t_bad)
        nodes.append(yk)

    i = n - m
    lag_final = yk if m == 0 else (hist if i < 0 else nodes[i])
    u_final = u0 if u_grid is None else (u0 if n - 1 - q < 0 else u_grid[n - 1 - q])
    kf = rhs(yk, lag_final, u_final)
    ders.append((kf[0], kf[1], kf[2]))
    return Trajectory(grid, np.array(nodes, dtype=float), np.array(ders, dtype=float), history)


def sample(traj: Trajectory, t: float) -> np.ndarray:
    """State at time t: stored sample at nodes, cubic Hermite in between,
    constant history for t <= t0 (down to t0 - tau)."""
    g = traj.grid
    slack = _NODE_TOL * g.step
    if t < g.t0 - g.tau - slack or t > g.tf + slack:
        raise ValueError(f"time {t!r} outside [{g.t0 - g.tau!r}, {g.tf!r}]")
    if t <= g.t0:
        return traj.history.state()
    pos = (t - g.t0) / g.step
    k = round(pos)
    if abs(pos - k) <= _NODE_TOL:
        return traj.samples[min(k, g.n_steps)].copy()
    i = math.floor(pos)
    theta = pos - i
    return _hermite(theta, g.step, traj.samples[i], traj.samples[i + 1], traj.derivs[i], traj.derivs[i + 1])
