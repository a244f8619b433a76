"""Linearization and characteristic-equation tests for the equilibria.

The characteristic function is det(s*I - A1 - exp(-s*tau)*A2), a cubic
plus a delayed quasi-polynomial part.  Closed forms per equilibrium are
normalized to leading coefficient +s^3 so they agree with the determinant
pointwise, not merely up to sign.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .model import ModelParams, StateTriple, thresholds

__all__ = [
    "Verdict",
    "LinearizationPair",
    "StabilityVerdict",
    "CharCoeffsE2",
    "RouthHurwitzE2",
    "CrossingSextic",
    "linearize",
    "char_det",
    "char_E0",
    "char_E1",
    "char_coeffs_E2",
    "char_E2",
    "classify_E0",
    "classify_E1",
    "routh_hurwitz_E2",
    "crossing_sextic_E2",
    "classify_E2_at_tau",
]

_ROOT_TOL = 1e-9


class Verdict(Enum):
    LOCALLY_ASYMPTOTICALLY_STABLE = "locally_asymptotically_stable"
    UNSTABLE = "unstable"
    CRITICAL_CASE = "critical_case"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class LinearizationPair:
    """Jacobian split: a1 multiplies the current state, a2 the delayed one."""

    a1: np.ndarray
    a2: np.ndarray


@dataclass(frozen=True)
class StabilityVerdict:
    equilibrium: str
    verdict: Verdict
    rationale: str
    evidence: dict


@dataclass(frozen=True)
class CharCoeffsE2:
    """CTL-equilibrium characteristic function
    s^3 + A s^2 + B s + C - delayed_factor * s * (s + d) * exp(-s*tau)."""

    A: float
    B: float
    C: float
    delayed_factor: float


@dataclass(frozen=True)
class RouthHurwitzE2:
    """Cubic sign conditions at zero delay for the CTL equilibrium."""

    D: float
    E: float
    F: float
    DE_minus_F: float
    stable_at_tau0: bool


@dataclass(frozen=True)
class CrossingSextic:
    """Imaginary-axis crossing polynomial Q w^6 + R w^4 + S w^2 + T,
    plus the roots of the cubic in v = w^2."""

    Q: float
    R: float
    S: float
    T: float
    v_roots: tuple
    v_root_kinds: tuple  # "real_positive" | "real_negative" | "real_zero" | "complex"


def linearize(params: ModelParams, eq_point: StateTriple) -> LinearizationPair:
    """Instantaneous and delayed Jacobian blocks at an equilibrium point."""
    lam, d, beta, a, p, c, h = (
        params.lambda_src, params.d, params.beta, params.a, params.p, params.c, params.h,
    )
    xb, yb, zb = eq_point
    a1 = np.array([
        [-d - beta * yb, -beta * xb, 0.0],
        [0.0, -a - p * zb, -p * yb],
        [c * yb * zb, c * xb * zb, c * xb * yb - h],
    ])
    a2 = np.array([
        [0.0, 0.0, 0.0],
        [beta * yb, beta * xb, 0.0],
        [0.0, 0.0, 0.0],
    ])
    return LinearizationPair(a1, a2)


def char_det(pair: LinearizationPair, tau: float, s: complex) -> complex:
    """Characteristic determinant det(s*I - A1 - exp(-s*tau)*A2)."""
    s = complex(s)
    mat = s * np.eye(3) - pair.a1 - cmath.exp(-s * tau) * pair.a2
    return complex(np.linalg.det(mat))


def char_E0(params: ModelParams, tau: float, s: complex) -> complex:
    """Closed form at the infection-free equilibrium:
    (d + s)(h + s)(a*d + d*s - beta*lambda*exp(-s*tau))/d."""
    s = complex(s)
    lam, d, beta, a, h = params.lambda_src, params.d, params.beta, params.a, params.h
    return (d + s) * (h + s) * (a * d + d * s - beta * lam * cmath.exp(-s * tau)) / d


def char_E1(params: ModelParams, tau: float, s: complex) -> complex:
    """Closed form at the infected no-CTL equilibrium, leading term +s^3.

    Product of the explicit linear factor (which carries the root
    (beta*lambda*c - beta^2*h - a*c*d)/beta^2) and a delayed quadratic.
    """
    s = complex(s)
    lam, d, beta, a, c, h = params.lambda_src, params.d, params.beta, params.a, params.c, params.h
    e = cmath.exp(-s * tau)
    lin = s * beta**2 - beta * lam * c + beta**2 * h + a * c * d
    quad = s**2 * a + s * a**2 - s * a**2 * e + lam * beta * s + lam * beta * a - a**2 * d * e
    return lin * quad / (a * beta**2)


def char_coeffs_E2(params: ModelParams) -> CharCoeffsE2:
    """Coefficients of the CTL-equilibrium characteristic function."""
    lam, d, beta, a, c, h = params.lambda_src, params.d, params.beta, params.a, params.c, params.h
    t2 = lam * c - beta * h
    if t2 == 0.0:
        raise ValueError("lambda*c - beta*h is zero; CTL characteristic coefficients undefined")
    A = (lam**2 * c**2 * beta + d**2 * lam * c**2 - 2.0 * lam * c * beta**2 * h + beta**3 * h**2) / (t2 * c * d)
    B = (c * lam * d * beta + c * lam * beta * h - c * h * a * d - beta**2 * h**2) / (c * d)
    C = -(-beta * lam * c + beta**2 * h + a * c * d) * h / c
    return CharCoeffsE2(A, B, C, beta * t2 / (c * d))


def char_E2(params: ModelParams, tau: float, s: complex) -> complex:
    """Closed form at the CTL equilibrium (cubic plus delayed quadratic)."""
    s = complex(s)
    k = char_coeffs_E2(params)
    return (s**3 + k.A * s**2 + k.B * s + k.C
            - k.delayed_factor * s * (s + params.d) * cmath.exp(-s * tau))


def _q_real(params: ModelParams, tau: float, s: float) -> float:
    """Real-axis restriction of the CTL characteristic function."""
    k = char_coeffs_E2(params)
    return (s**3 + k.A * s**2 + k.B * s + k.C
            - k.delayed_factor * s * (s + params.d) * np.exp(-s * tau))


def _q_real_deriv(params: ModelParams, tau: float, s) -> np.ndarray:
    k = char_coeffs_E2(params)
    s = np.asarray(s, dtype=float)
    e = np.exp(-s * tau)
    return (3.0 * s**2 + 2.0 * k.A * s + k.B
            - k.delayed_factor * e * ((2.0 * s + params.d) - tau * s * (s + params.d)))


def classify_E0(params: ModelParams) -> StabilityVerdict:
    """Delay-independent verdict for the infection-free equilibrium.

    The sign of t1 = beta*lambda - d*a decides; the evidence carries the
    would-be imaginary-axis crossing frequency squared, which is negative
    exactly when t1 < 0 (no crossing possible for any delay).
    """
    t = thresholds(params)
    lam, d, beta, a = params.lambda_src, params.d, params.beta, params.a
    w2 = (lam**2 * beta**2 - d**2 * a**2) / d**2
    evidence = {"t1": t.t1, "crossing_w2": w2}
    if t.t1 < 0.0:
        return StabilityVerdict(
            "E0", Verdict.LOCALLY_ASYMPTOTICALLY_STABLE,
            "t1 < 0: all characteristic roots stay in the left half-plane for every delay",
            evidence)
    if t.t1 > 0.0:
        return StabilityVerdict(
            "E0", Verdict.UNSTABLE,
            "t1 > 0: the characteristic function has a positive real root for every delay",
            evidence)
    return StabilityVerdict(
        "E0", Verdict.CRITICAL_CASE,
        "t1 = 0: zero is a characteristic root (knife-edge case)",
        evidence)


def classify_E1(params: ModelParams) -> StabilityVerdict:
    """Verdict for the infected no-CTL equilibrium under t1 > 0, t2 > 0."""
    t = thresholds(params)
    lam, d, beta, a = params.lambda_src, params.d, params.beta, params.a
    if not (t.t1 > 0.0 and t.t2 > 0.0):
        return StabilityVerdict(
            "E1", Verdict.INCONCLUSIVE, "hypotheses not met (need t1 > 0 and t2 > 0)",
            {"t1": t.t1, "t2": t.t2, "t3": t.t3})
    evidence = {
        "t1": t.t1, "t2": t.t2, "t3": t.t3,
        # zero-delay quadratic coefficients, all positive when t1 > 0
        "rh_c2": 1.0 / beta**2,
        "rh_c1": lam / (a * beta),
        "rh_c0": (lam * beta - a * d) / beta**2,
        # crossing contradiction: negative iff no imaginary-axis crossing
        "crossing_gap": a**2 * d**2 - lam**2 * beta**2,
    }
    if t.t3 < 0.0:
        return StabilityVerdict(
            "E1", Verdict.LOCALLY_ASYMPTOTICALLY_STABLE,
            "t3 < 0: stable at zero delay and no imaginary-axis crossing for any delay",
            evidence)
    if t.t3 > 0.0:
        evidence["positive_root"] = t.t3 / beta**2
        return StabilityVerdict(
            "E1", Verdict.UNSTABLE,
            "t3 > 0: the explicit linear factor contributes a positive real root",
            evidence)
    return StabilityVerdict(
        "E1", Verdict.CRITICAL_CASE, "t3 = 0: boundary case not covered by the sign tests",
        evidence)


def routh_hurwitz_E2(params: ModelParams) -> RouthHurwitzE2:
    """Zero-delay cubic sign conditions for the CTL equilibrium (needs t2 > 0)."""
    t = thresholds(params)
    if not t.t2 > 0.0:
        raise ValueError(f"routh_hurwitz_E2 requires lambda*c - beta*h > 0, got {t.t2!r}")
    lam, d, beta, a, c, h = params.lambda_src, params.d, params.beta, params.a, params.c, params.h
    D = d * lam * c / t.t2
    E = (beta * lam * c - a * c * d + d * beta**2 - beta**2 * h) * h / (c * d)
    F = (beta * lam * c - beta**2 * h - a * c * d) * h / c
    DE_minus_F = (h * beta * (c * lam * d * beta + h * (c * lam * beta - c * a * d - beta**2 * h))
                  / (t.t2 * c))
    stable = D > 0.0 and E > 0.0 and F > 0.0 and DE_minus_F > 0.0
    return RouthHurwitzE2(D, E, F, DE_minus_F, stable)


def _classify_v_root(v: complex) -> str:
    scale = 1.0 + abs(v)
    if abs(v.imag) > _ROOT_TOL * scale:
        return "complex"
    if abs(v.real) <= _ROOT_TOL * scale:
        return "real_zero"
    return "real_positive" if v.real > 0.0 else "real_negative"


def crossing_sextic_E2(params: ModelParams) -> CrossingSextic:
    """Coefficients of the crossing polynomial in w, plus the v = w^2 roots.

    Real positive v roots correspond to genuine crossing frequencies;
    the roots come from companion-matrix eigenvalues of the monic cubic.
    """
    t = thresholds(params)
    if not t.t2 > 0.0:
        raise ValueError(f"crossing_sextic_E2 requires lambda*c - beta*h > 0, got {t.t2!r}")
    l, d, b, a, c, h = params.lambda_src, params.d, params.beta, params.a, params.c, params.h

    Q = l**2 * c**4 * d**2 + b**2 * h**2 * c**2 * d**2 - 2 * l * c**3 * d**2 * b * h
    R = (6 * l**2 * c**3 * d * b**2 * h**2 + 2 * l**2 * c**4 * d**2 * h * a + d**4 * l**2 * c**4
         + 2 * b**4 * h**4 * c * d - 2 * l**3 * c**4 * d * h * b + 2 * b**2 * h**3 * a * c**2 * d**2
         - 6 * b**3 * h**3 * l * c**2 * d - 4 * l * c**3 * d**2 * b * h**2 * a)
    S = (-2 * b**6 * h**5 * d - b**6 * d**2 * h**4 - 2 * d**3 * l**3 * c**4 * h * b
         - 2 * h**3 * b**3 * d**3 * l * c**2 - 2 * b**4 * h**4 * d**2 * a * c
         + 2 * d**4 * l**2 * c**4 * h * a + 4 * d**3 * l**2 * c**3 * b**2 * h**2
         + 4 * b**5 * h**3 * d**2 * l * c - 6 * b**3 * h**4 * l * c**2 * a * d
         - 2 * l**2 * c**3 * h**2 * a * d**2 * b**2 - 2 * l * c**3 * h**3 * a**2 * d**2 * b
         + 6 * l**2 * c**3 * h**3 * a * d * b**2 - 2 * l**3 * c**4 * h**2 * a * d * b
         + 4 * d**2 * l * c**2 * b**3 * h**3 * a + b**6 * h**6 - 4 * b**5 * h**5 * l * c
         + 6 * b**4 * h**4 * l**2 * c**2 - 4 * l**3 * c**3 * b**3 * h**3
         + l**4 * c**4 * h**2 * b**2 - 2 * h**2 * b * d**4 * a * c**3 * l
         + 6 * b**5 * h**4 * d * l * c + 2 * b**4 * h**5 * a * c * d
         - 6 * b**4 * h**3 * d * l**2 * c**2 + l**2 * c**4 * h**2 * a**2 * d**2
         - 5 * d**2 * l**2 * c**2 * b**4 * h**2 + 2 * d**2 * l**3 * c**3 * b**3 * h
         + 2 * d * l**3 * c**3 * b**3 * h**2 + b**2 * h**4 * a**2 * c**2 * d**2)
    T = (-4 * d**2 * l**3 * c**3 * b**3 * h**3 - 4 * d**2 * l * c * b**5 * h**5
         + d**2 * l**4 * c**4 * h**2 * b**2 - 2 * h**3 * b * d**4 * a**2 * c**3 * l
         - 6 * h**4 * b**3 * d**3 * a * c**2 * l + h**6 * b**6 * d**2
         + h**4 * b**2 * d**4 * a**2 * c**2 + 2 * h**5 * b**4 * d**3 * a * c
         + 6 * h**3 * b**2 * d**3 * a * c**3 * l**2 - 2 * d**3 * l**3 * c**4 * h**2 * a * b
         + d**4 * l**2 * c**4 * h**2 * a**2 + 6 * d**2 * l**2 * c**2 * b**4 * h**4)

    roots = np.roots([1.0, R / Q, S / Q, T / Q])
    order = np.argsort(roots.real)
    v_roots = tuple(complex(roots[i]) for i in order)
    kinds = tuple(_classify_v_root(v) for v in v_roots)
    return CrossingSextic(Q, R, S, T, v_roots, kinds)


def classify_E2_at_tau(
    params: ModelParams,
    tau: float,
    s_max: float = 50.0,
    n_samples: int = 5000,
) -> StabilityVerdict:
    """Verdict for the CTL equilibrium at a given delay (needs t2, t3 > 0).

    At zero delay this is the cubic sign test.  For positive delay the
    check is a sampled real-axis certificate: the real restriction q of
    the characteristic function satisfies q(0) > 0 and q' > 0 on
    [0, s_max] (samples plus midpoints), which rules out nonnegative real
    roots.  It certifies nothing about complex roots, so a failed check
    is reported as inconclusive rather than unstable.
    """
    t = thresholds(params)
    if not (t.t2 > 0.0 and t.t3 > 0.0) or tau < 0.0:
        return StabilityVerdict(
            "E2", Verdict.INCONCLUSIVE, "hypotheses not met (need t2 > 0, t3 > 0, tau >= 0)",
            {"t1": t.t1, "t2": t.t2, "t3": t.t3, "tau": tau})

    if tau == 0.0:
        rh = routh_hurwitz_E2(params)
        evidence = {"D": rh.D, "E": rh.E, "F": rh.F, "DE_minus_F": rh.DE_minus_F}
        if rh.stable_at_tau0:
            return StabilityVerdict(
                "E2", Verdict.LOCALLY_ASYMPTOTICALLY_STABLE,
                "zero delay: cubic coefficients and DE - F all positive",
                evidence)
        return StabilityVerdict(
            "E2", Verdict.INCONCLUSIVE,
            "zero delay: a cubic sign condition failed despite t3 > 0",
            evidence)

    grid = np.linspace(0.0, s_max, n_samples)
    mids = 0.5 * (grid[:-1] + grid[1:])
    points = np.concatenate([grid, mids])
    q0 = float(_q_real(params, tau, 0.0))
    dq = _q_real_deriv(params, tau, points)
    evidence = {"q0": q0, "min_q_prime": float(dq.min()), "s_max": s_max, "n_samples": n_samples}
    if q0 > 0.0 and np.all(dq > 0.0):
        return StabilityVerdict(
            "E2", Verdict.LOCALLY_ASYMPTOTICALLY_STABLE,
            "no nonnegative real roots (q(0) > 0 and q' > 0 sampled on [0, s_max]); "
            "complex roots not examined",
            evidence)
    return StabilityVerdict(
        "E2", Verdict.INCONCLUSIVE,
        "real-axis check failed: q(0) <= 0 or q' not positive on the sample grid",
        evidence)
