"""Within-host HIV model: parameters, thresholds, equilibria, vector fields.

Three cell populations: uninfected CD4+ T cells x, infected CD4+ T cells y,
CTL effectors z.  New infections incubate, so the growth term of y reads
the state one incubation delay in the past.  Treatment scales the infection
rate by (1 - u), where the control u acts after a pharmacological delay.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

__all__ = [
    "ModelParams",
    "StateTriple",
    "ThresholdReport",
    "Equilibrium",
    "thresholds",
    "equilibria",
    "uncontrolled_rhs",
    "controlled_rhs",
    "uncontrolled_field",
    "controlled_field",
]


class StateTriple(NamedTuple):
    """Point in state space (populations in cells)."""

    x: float
    y: float
    z: float


class ThresholdReport(NamedTuple):
    """Sign constants that settle equilibrium admissibility and stability."""

    t1: float  # beta*lambda - d*a
    t2: float  # lambda*c - beta*h
    t3: float  # beta*(lambda*c - beta*h) - a*c*d


@dataclass(frozen=True)
class ModelParams:
    """The seven biological rates.  All must be strictly positive."""

    lambda_src: float  # source rate of CD4+ T cells (cells/day)
    d: float           # decay rate of CD4+ T cells (1/day)
    beta: float        # infection rate (1/(cells*day))
    a: float           # infected-cell death rate, not by CTL killing (1/day)
    p: float           # CTL killing rate (1/day)
    c: float           # immune response activation rate (1/day)
    h: float           # CTL death rate (1/day)

    def __post_init__(self) -> None:
        for name in ("lambda_src", "d", "beta", "a", "p", "c", "h"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"parameter {name} must be strictly positive and finite, got {value!r}")


@dataclass(frozen=True)
class Equilibrium:
    """Steady state of the uncontrolled system, tagged by kind.

    Non-admissible equilibria (negative coordinates or defining inequality
    violated) are still reported with ``admissible=False`` so they can be
    fed to the stability machinery.
    """

    kind: str  # "E0" | "E1" | "E2"
    point: StateTriple
    admissible: bool


def thresholds(params: ModelParams) -> ThresholdReport:
    """Compute (t1, t2, t3) = (beta*lambda - d*a, lambda*c - beta*h, beta*t2 - a*c*d)."""
    t1 = params.beta * params.lambda_src - params.d * params.a
    t2 = params.lambda_src * params.c - params.beta * params.h
    t3 = params.beta * t2 - params.a * params.c * params.d
    return ThresholdReport(t1, t2, t3)


def equilibria(params: ModelParams) -> list[Equilibrium]:
    """All equilibria of the uncontrolled system, with admissibility flags.

    E0 (infection free) is always present and admissible.  E1 (infected,
    no CTL response) is admissible iff t1 > 0 and t3 < 0.  E2 (CTL
    equilibrium) is admissible iff t2 > 0 and t3 > 0; it is omitted with a
    warning when t2 == 0 exactly, since its coordinates divide by t2.
    """
    lam, d, beta, a, p, c, h = (
        params.lambda_src, params.d, params.beta, params.a, params.p, params.c, params.h,
    )
    t1, t2, t3 = thresholds(params)

    out = [Equilibrium("E0", StateTriple(lam / d, 0.0, 0.0), True)]

    e1 = StateTriple(a / beta, (lam * beta - d * a) / (beta * a), 0.0)
    out.append(Equilibrium("E1", e1, t1 > 0.0 and t3 < 0.0))

    if t2 == 0.0:
        warnings.warn("lambda*c - beta*h is exactly zero; CTL equilibrium E2 is undefined and omitted")
        return out
    e2 = StateTriple(t2 / (c * d), d * h / t2, beta * t2 / (c * d * p) - a / p)
    out.append(Equilibrium("E2", e2, t2 > 0.0 and t3 > 0.0))
    return out


def controlled_rhs(
    params: ModelParams,
    current: StateTriple,
    delayed: StateTriple,
    u_delayed: float,
) -> StateTriple:
    """Treated vector field; the delayed control scales infection by (1 - u).

    ``delayed`` supplies (x, y) one incubation delay in the past; only the
    infection terms of the first two equations see the control, the CTL
    equation is untouched.
    """
    if not 0.0 <= u_delayed <= 1.0:
        raise ValueError(f"delayed control must lie in [0, 1], got {u_delayed!r}")
    x, y, z = current
    x_tau, y_tau = delayed[0], delayed[1]
    eff = (1.0 - u_delayed) * params.beta
    return StateTriple(
        params.lambda_src - params.d * x - eff * x * y,
        eff * x_tau * y_tau - params.a * y - params.p * y * z,
        params.c * x * y * z - params.h * z,
    )


def uncontrolled_rhs(params: ModelParams, current: StateTriple, delayed: StateTriple) -> StateTriple:
    """Untreated vector field (the controlled field with u = 0)."""
    return controlled_rhs(params, current, delayed, 0.0)


def controlled_field(params: ModelParams):
    """Integrator-facing closure f(y, y_lag, u_lag) over length-3 sequences."""
    def f(y, ylag, ulag):
        return controlled_rhs(params, y, ylag, ulag)
    return f


def uncontrolled_field(params: ModelParams):
    """Integrator-facing closure that ignores the control argument."""
    def f(y, ylag, ulag):
        return controlled_rhs(params, y, ylag, 0.0)
    return f
