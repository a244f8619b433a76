"""Characteristic functions, classifiers, and the crossing polynomial."""

import cmath

import numpy as np
import pytest

from hivdelay import (
    ModelParams,
    StateTriple,
    Verdict,
    char_E0,
    char_E1,
    char_E2,
    char_det,
    classify_E0,
    classify_E1,
    classify_E2_at_tau,
    crossing_sextic_E2,
    equilibria,
    linearize,
    routh_hurwitz_E2,
    thresholds,
)
from hivdelay.stability import LinearizationPair

TABLE1 = dict(lambda_src=1.0, d=0.1, a=0.2, p=1.0, c=0.1, h=0.1)

TAUS = (0.0, 0.5, 1.0, 10.0)


def params(beta):
    return ModelParams(beta=beta, **TABLE1)


def point(eqs, kind):
    return next(e for e in eqs if e.kind == kind).point


# ── linearization ────────────────────────────────────────────────────────────

def test_linearize_infection_free():
    p = params(0.00025)
    pair = linearize(p, StateTriple(10.0, 0.0, 0.0))
    expect_a1 = np.array([[-0.1, -0.00025 * 10.0, 0.0], [0.0, -0.2, 0.0], [0.0, 0.0, -0.1]])
    assert np.allclose(pair.a1, expect_a1, atol=1e-15)
    assert pair.a2[1, 1] == pytest.approx(0.00025 * 10.0, abs=1e-15)
    assert np.count_nonzero(pair.a2) == 1


def test_linearize_origin_is_diagonal():
    pair = linearize(params(0.5), StateTriple(0.0, 0.0, 0.0))
    assert np.allclose(pair.a1, np.diag([-0.1, -0.2, -0.1]))
    assert not pair.a2.any()


def test_linearize_ctl_equilibrium_corner_entry():
    p = params(0.5)
    e2 = point(equilibria(p), "E2")
    pair = linearize(p, e2)
    # c*x*y - h vanishes at the CTL equilibrium by construction
    assert pair.a1[2, 2] == pytest.approx(0.0, abs=1e-15)


def test_delayed_block_structure():
    p = params(0.5)
    for kind in ("E0", "E1", "E2"):
        pair = linearize(p, point(equilibria(p), kind))
        off_row = pair.a2.copy()
        off_row[1, :2] = 0.0
        assert not off_row.any()


# ── characteristic determinant and closed forms ─────────────────────────────

def test_char_det_identity_matrices():
    pair = LinearizationPair(np.zeros((3, 3)), np.zeros((3, 3)))
    assert char_det(pair, 1.0, 2.0) == pytest.approx(8.0)


def test_char_det_roots_infection_free():
    p = params(0.00025)
    pair = linearize(p, StateTriple(10.0, 0.0, 0.0))
    for tau in TAUS:
        assert abs(char_det(pair, tau, -0.1)) < 1e-10          # s = -d
    # at zero delay the third factor vanishes at (beta*lambda - d*a)/d
    root = (0.00025 - 0.02) / 0.1
    assert abs(char_det(pair, 0.0, root)) < 1e-10


def test_char_E0_explicit_factors():
    for beta in (0.00025, 0.5):
        p = params(beta)
        for tau in TAUS:
            assert char_E0(p, tau, -p.h) == 0.0
            assert char_E0(p, tau, -p.d) == 0.0


def test_char_E0_at_zero():
    # h*(a*d - beta*lambda) by direct substitution
    value = char_E0(params(0.00025), 0.0, 0.0)
    assert value.real == pytest.approx(0.1 * (0.02 - 0.00025), abs=1e-15)
    assert value.imag == 0.0


def test_char_E1_known_root():
    p = params(0.5)
    t = thresholds(p)
    root = t.t3 / p.beta**2
    for tau in TAUS:
        r = char_E1(p, tau, root)
        assert abs(r) < 1e-8 * (1.0 + abs(root) ** 3)


def test_closed_forms_match_determinant():
    rng = np.random.default_rng(7)
    for beta, kind, closed in (
        (0.00025, "E0", char_E0),
        (0.5, "E0", char_E0),
        (0.5, "E1", char_E1),
        (0.0202, "E1", char_E1),
        (0.5, "E2", char_E2),
    ):
        p = params(beta)
        pair = linearize(p, point(equilibria(p), kind))
        for tau in TAUS:
            for _ in range(50):
                s = complex(*rng.uniform(-10.0, 10.0, 2))
                det = char_det(pair, tau, s)
                cf = closed(p, tau, s)
                assert abs(cf - det) <= 1e-8 * max(1.0, abs(det)), (beta, kind, tau, s)


# ── infection-free classification ────────────────────────────────────────────

def test_classify_infection_free():
    v = classify_E0(params(0.00025))
    assert v.verdict is Verdict.LOCALLY_ASYMPTOTICALLY_STABLE
    assert v.evidence["t1"] < 0.0
    assert v.evidence["crossing_w2"] < 0.0

    v = classify_E0(params(0.5))
    assert v.verdict is Verdict.UNSTABLE


def test_classify_infection_free_critical_case():
    # beta*lambda == d*a exactly with power-of-two rates
    p = ModelParams(lambda_src=1.0, d=0.5, beta=0.25, a=0.5, p=1.0, c=0.1, h=0.1)
    assert thresholds(p).t1 == 0.0
    assert classify_E0(p).verdict is Verdict.CRITICAL_CASE


def test_classify_infection_free_flips_once_across_threshold():
    verdicts = []
    for beta in np.linspace(0.015, 0.025, 21):
        p = params(float(beta))
        v = classify_E0(p)
        expected = (Verdict.LOCALLY_ASYMPTOTICALLY_STABLE if thresholds(p).t1 < 0.0
                    else Verdict.UNSTABLE if thresholds(p).t1 > 0.0 else Verdict.CRITICAL_CASE)
        assert v.verdict is expected
        verdicts.append(v.verdict)
    changes = sum(1 for a, b in zip(verdicts, verdicts[1:]) if a is not b)
    assert changes == 1
    assert verdicts[0] is Verdict.LOCALLY_ASYMPTOTICALLY_STABLE
    assert verdicts[-1] is Verdict.UNSTABLE


# ── infected-equilibrium classification ──────────────────────────────────────

def test_classify_infected_unstable_beyond_window():
    p = params(0.025)
    t = thresholds(p)
    assert t.t3 == pytest.approx(0.0004375, abs=1e-15)
    v = classify_E1(p)
    assert v.verdict is Verdict.UNSTABLE
    assert v.evidence["positive_root"] == pytest.approx(t.t3 / 0.025**2, rel=1e-12)


def test_classify_infected_matches_t3_sign():
    for beta in (0.021, 0.0202, 0.0207):
        p = params(beta)
        t = thresholds(p)
        v = classify_E1(p)
        if t.t3 < 0.0:
            assert v.verdict is Verdict.LOCALLY_ASYMPTOTICALLY_STABLE
        elif t.t3 > 0.0:
            assert v.verdict is Verdict.UNSTABLE


def test_classify_infected_requires_hypotheses():
    v = classify_E1(params(0.00025))  # t1 < 0
    assert v.verdict is Verdict.INCONCLUSIVE
    assert "hypotheses" in v.rationale


def test_classify_infected_evidence_positive_under_hypotheses():
    v = classify_E1(params(0.0202))
    assert v.evidence["rh_c2"] > 0.0
    assert v.evidence["rh_c1"] > 0.0
    assert v.evidence["rh_c0"] > 0.0
    assert v.evidence["crossing_gap"] < 0.0


# ── CTL equilibrium: cubic conditions and crossing polynomial ────────────────

def test_routh_hurwitz_values():
    rh = routh_hurwitz_E2(params(0.5))
    assert rh.D == pytest.approx(0.2, rel=1e-12)
    assert rh.E == pytest.approx(0.48, rel=1e-12)
    assert rh.F == pytest.approx(0.023, rel=1e-12)
    assert rh.DE_minus_F == pytest.approx(0.2 * 0.48 - 0.023, rel=1e-10)
    assert rh.stable_at_tau0


def test_routh_hurwitz_f_tracks_t3():
    p = params(0.5)
    t = thresholds(p)
    rh = routh_hurwitz_E2(p)
    assert rh.F == pytest.approx(t.t3 * p.h / p.c, rel=1e-12)
    # negative t3 propagates into F and kills the stability flag
    p2 = params(0.0202)
    assert thresholds(p2).t3 < 0.0
    rh2 = routh_hurwitz_E2(p2)
    assert rh2.F < 0.0
    assert not rh2.stable_at_tau0


def test_routh_hurwitz_needs_positive_t2():
    with pytest.raises(ValueError):
        routh_hurwitz_E2(ModelParams(lambda_src=1.0, d=0.1, beta=2.0, a=0.2, p=1.0, c=0.1, h=0.1))


def _factored_crossing_coeffs(p):
    # independent refactoring: the polynomial comes from squaring the two
    # crossing equations, so its coefficients reduce to L, G, M, H combinations
    l, d, b, a, c, h = p.lambda_src, p.d, p.beta, p.a, p.c, p.h
    t2 = l * c - b * h
    t3 = b * t2 - a * c * d
    L = -c * d * t2
    G = -b * t2**2 - l * c**2 * d**2
    M = t2 * (d * l * c * b + h * b * l * c - b**2 * h**2 - a * c * d * h)
    H = d * h * t2 * t3
    Q = L**2
    R = 2 * L * M + G**2 - b**2 * t2**4
    S = M**2 + 2 * G * H - d**2 * b**2 * t2**4
    T = H**2
    return Q, R, S, T


def test_crossing_sextic_monic_coefficients():
    sx = crossing_sextic_E2(params(0.5))
    assert sx.R / sx.Q == pytest.approx(-21.0 / 50.0, rel=1e-12)
    assert sx.S / sx.Q == pytest.approx(1731.0 / 5000.0, rel=1e-12)
    assert sx.T / sx.Q == pytest.approx(529.0 / 1000000.0, rel=1e-12)


def test_crossing_sextic_against_factored_oracle():
    for beta in (0.5, 0.3, 0.025, 0.0202):
        p = params(beta)
        sx = crossing_sextic_E2(p)
        Q, R, S, T = _factored_crossing_coeffs(p)
        assert sx.Q == pytest.approx(Q, rel=1e-12)
        assert sx.R == pytest.approx(R, rel=1e-11)
        assert sx.S == pytest.approx(S, rel=1e-11)
        assert sx.T == pytest.approx(T, rel=1e-11)


def test_crossing_sextic_leading_coefficient_positivity_and_degeneracy():
    assert crossing_sextic_E2(params(0.5)).Q > 0.0
    # t2 -> 0+ collapses the leading coefficient
    p = ModelParams(lambda_src=1.0, d=0.1, beta=0.99999, a=0.2, p=1.0, c=0.1, h=0.1)
    assert 0.0 < thresholds(p).t2 < 2e-6
    assert crossing_sextic_E2(p).Q < 1e-8


def test_crossing_sextic_roots_no_real_positive():
    sx = crossing_sextic_E2(params(0.5))
    assert "real_positive" not in sx.v_root_kinds
    assert "real_negative" in sx.v_root_kinds
    # root residuals of the monic cubic in v
    for v in sx.v_roots:
        res = v**3 + (sx.R / sx.Q) * v**2 + (sx.S / sx.Q) * v + sx.T / sx.Q
        assert abs(res) < 1e-12


# ── CTL classification across delays ─────────────────────────────────────────

def test_classify_ctl_zero_delay_uses_cubic_conditions():
    v = classify_E2_at_tau(params(0.5), 0.0)
    assert v.verdict is Verdict.LOCALLY_ASYMPTOTICALLY_STABLE
    assert set(v.evidence) >= {"D", "E", "F", "DE_minus_F"}


def test_classify_ctl_positive_delay_real_axis_check():
    v = classify_E2_at_tau(params(0.5), 10.0)
    assert v.verdict is Verdict.LOCALLY_ASYMPTOTICALLY_STABLE
    assert v.evidence["q0"] == pytest.approx(23.0 / 1000.0, abs=1e-12)
    assert v.evidence["min_q_prime"] > 0.0


def test_classify_ctl_hypotheses_guard():
    assert classify_E2_at_tau(params(0.00025), 10.0).verdict is Verdict.INCONCLUSIVE
    assert classify_E2_at_tau(params(0.5), -1.0).verdict is Verdict.INCONCLUSIVE


def test_real_axis_restriction_matches_printed_quasipolynomial():
    # q(s) = -e^{-10 s) s / 4 - 5 e^{-10 s} s^2 / 2 + 23/1000 + 73 s/100
    #        + 27 s^2/10 + s^3 for Table 1 rates at beta = 1/2, delay 10
    p = params(0.5)
    for s in (0.0, 0.1, 1.0):
        printed = (-0.25 * np.exp(-10.0 * s) * s - 2.5 * np.exp(-10.0 * s) * s**2
                   + 23.0 / 1000.0 + 73.0 * s / 100.0 + 27.0 * s**2 / 10.0 + s**3)
        value = char_E2(p, 10.0, complex(s, 0.0))
        assert value.imag == 0.0
        assert value.real == pytest.approx(printed, abs=1e-12)


def test_verdicts_are_deterministic():
    a = classify_E2_at_tau(params(0.5), 10.0)
    b = classify_E2_at_tau(params(0.5), 10.0)
    assert a == b
