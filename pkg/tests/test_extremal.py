import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from hilbertops import (
    DomainError,
    L_epsilon,
    OperatorParams,
    PiecewisePowerFunction,
    UnitIntervalMeasure,
    beta,
    boundary_gamma_blowup,
    build_family,
    divergence_exponent_fit,
    duality_pairing,
    hardy_coefficient_sequence,
    rayleigh_lower_bound,
    sharp_norm,
)
from hilbertops.extremal import threshold_partial_sums

P2 = OperatorParams.critical(2.0)
P3 = OperatorParams.critical(3.0, theta1=0.8, alpha=0.5, beta=-0.5)


@pytest.mark.parametrize("kind,kw", [("f_tilde", dict(eps=0.1)), ("f_hat", dict(eps=0.3)),
                                     ("f_w", dict(w=0.9))])
def test_family_norms(kind, kw):
    fam = build_family(kind, 2.0, **kw)
    assert fam.exact_norm == 1.0
    assert fam.realized.norm(2.0) == pytest.approx(1.0, rel=1e-12)


@given(st.floats(min_value=0.05, max_value=0.95), st.floats(min_value=1.2, max_value=4.0))
def test_g_w_unit_norm(w, q):
    g = build_family("g_w", q, w=w).realized
    n = np.arange(1, 200_000, dtype=float)
    assert math.fsum(g(n) ** q) == pytest.approx(1.0, rel=1e-10)


@given(st.floats(min_value=0.01, max_value=1.0), st.floats(min_value=0.3, max_value=1.0))
def test_f_tilde_norm_with_theta(eps, t1):
    fam = build_family("f_tilde", 3.0, eps=eps, theta1=t1)
    assert fam.realized.norm(3.0) == pytest.approx(t1 ** (-1 / 3), rel=1e-12)


def test_family_domain():
    with pytest.raises(DomainError):
        build_family("f_tilde", 2.0, eps=0.0)
    with pytest.raises(DomainError):
        build_family("f_w", 2.0, w=1.0)
    with pytest.raises(DomainError):
        build_family("nope", 2.0, eps=0.1)


def test_L_epsilon():
    assert L_epsilon(P2, 0.1) == pytest.approx(math.pi / math.sin(0.55 * math.pi), rel=1e-12)
    assert L_epsilon(P2, 1e-6) == pytest.approx(math.pi, abs=1e-4)
    assert L_epsilon(P3, 1e-6) == pytest.approx(beta(0.5 / 3, 1.5 / 3), abs=1e-4)
    with pytest.raises(DomainError):
        L_epsilon(P2, 1.0)


def test_rayleigh_large_eps_in_range():
    r = rayleigh_lower_bound(P2, 0.5)
    assert 2.0 < r.value < math.pi
    assert r.fitted_exponent == pytest.approx(r.analytic_exponent, rel=1e-3)


@pytest.mark.parametrize("pr,eps", [(P2, 0.5), (P2, 0.05), (P3, 0.05)])
def test_rayleigh_matches_oracle(pr, eps):
    r = rayleigh_lower_bound(pr, eps)
    ref = oracles.rayleigh_reference(pr.p, pr.theta1, pr.theta2, pr.alpha, pr.beta, eps)
    assert r.value == pytest.approx(ref, rel=1e-4)
    assert r.value <= sharp_norm(pr) * (1 + 1e-3)


def test_rayleigh_increasing_along_ladder():
    vals = [rayleigh_lower_bound(P2, e).value for e in (0.5, 0.2, 0.1, 0.05)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("lam,eps,delta", [(0.75, 0.1, 0.4), (0.5, 0.2, 0.8)])
def test_divergence_exponent(lam, eps, delta):
    fit = divergence_exponent_fit(OperatorParams(2.0, lam), eps)
    assert fit.predicted_delta == pytest.approx(delta)
    assert fit.relative_error <= 0.1
    assert all(b > a for a, b in zip(fit.partial_sums, fit.partial_sums[1:]))


def test_divergence_needs_subcritical_lam():
    with pytest.raises(DomainError):
        divergence_exponent_fit(P2, 0.1)


def test_threshold_partial_sums_bounded():
    S = threshold_partial_sums(P2, 0.1, (1000, 10_000))
    assert np.all(S <= math.pi ** 2)
    assert S[1] > S[0]


def test_duality_lebesgue_surrogate():
    for w in (0.5, 0.9, 0.99):
        r = duality_pairing(P2, UnitIntervalMeasure.lebesgue(), w)
        assert r.surrogate == pytest.approx(1 / (1 + w), rel=1e-10)


@pytest.mark.parametrize("w", [0.5, 0.9, 0.99])
@pytest.mark.parametrize("s,m", [(1.0, UnitIntervalMeasure.lebesgue()),
                                 (0.5, UnitIntervalMeasure.power_density(-0.5, 0.5))])
def test_duality_pairing_matches_quadrature(w, s, m):
    ref = oracles.duality_pairing_reference(w, s)
    assert duality_pairing(P2, m, w).pairing == pytest.approx(ref, rel=1e-8)


def test_duality_deficient_surrogate_and_pairing():
    m = UnitIntervalMeasure.power_density(-0.5, 0.5)
    rs = [duality_pairing(P2, m, w) for w in (0.9, 0.99, 0.999)]
    for w, r in zip((0.9, 0.99, 0.999), rs):
        assert r.surrogate == pytest.approx((1 - w) ** 0.5 / (1 - w * w), rel=1e-10)
    assert rs[0].pairing < rs[1].pairing < rs[2].pairing


def test_boundary_gamma_minus_one():
    b = boundary_gamma_blowup(2.0, -1.0, (0.4, 0.2, 0.1))
    assert b.strictly_increasing and b.verdict == "increasing"
    # growth at least like 1/eps
    vals = [v for _, v in b.values]
    assert vals[-1] / vals[0] >= 4.0


def test_boundary_gamma_large_is_infinite():
    # for gamma >= p - 1 the output behaves like n^(-1/p): the p-th power sum is infinite
    b = boundary_gamma_blowup(2.0, 1.0, (0.4, 0.2, 0.1))
    assert all(math.isinf(v) for _, v in b.values)
    assert b.verdict == "divergent"


def test_boundary_gamma_below_minus_one():
    b = boundary_gamma_blowup(2.0, -1.5)
    assert b.verdict == "divergent" and not b.values


def test_boundary_domain():
    with pytest.raises(DomainError):
        boundary_gamma_blowup(2.0, 0.0)
    with pytest.raises(DomainError):
        boundary_gamma_blowup(2.0, -1.0, (0.1, 0.2))


def test_hardy_coefficients():
    c = hardy_coefficient_sequence(PiecewisePowerFunction.indicator(0.0, 1.0), 5)
    assert c.values[0] == pytest.approx(math.log(2), rel=1e-9)
    assert c.values[2] == pytest.approx(math.log(4 / 3), rel=1e-9)
    f = build_family("f_tilde", 2.0, eps=0.5).realized
    w = hardy_coefficient_sequence(f, 1000)
    assert math.sqrt(np.sum(w.values ** 2)) <= math.pi * f.norm(2.0)
