import math

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from hilbertops import DomainError, beta, gamma, geometric_power_sum_ratio, power_zeta_tail
from hilbertops import stirling_remainder
from hilbertops.specfun import geometric_power_sum, lgamma, log_beta

pos = st.floats(min_value=0.05, max_value=60.0)


@given(pos)
def test_gamma_matches_mpmath(x):
    assert gamma(x) == pytest.approx(float(mp.gamma(x)), rel=1e-12)


@given(st.floats(min_value=0.05, max_value=1e6))
def test_lgamma_matches_mpmath(x):
    assert lgamma(x) == pytest.approx(float(mp.loggamma(x)), rel=1e-12, abs=1e-13)


@pytest.mark.parametrize("x", [0.1, 0.5, 1.0, 2.5, 7.0])
def test_gamma_against_integral_definition(x):
    assert gamma(x) == pytest.approx(float(oracles.gamma_integral(x)), rel=1e-12)


def test_gamma_recurrence_and_half():
    assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)
    for x in (0.3, 1.7, 12.2):
        assert gamma(x + 1) == pytest.approx(x * gamma(x), rel=1e-13)


@given(pos, pos)
def test_beta_symmetric_and_gamma_ratio(u, v):
    b = beta(u, v)
    assert b == pytest.approx(beta(v, u), rel=1e-14)
    assert b == pytest.approx(float(mp.beta(u, v)), rel=1e-11)


@given(st.floats(min_value=0.01, max_value=0.99))
def test_beta_reflection(u):
    assert beta(u, 1 - u) == pytest.approx(math.pi / math.sin(math.pi * u), rel=1e-11)


def test_log_beta_large_arguments_do_not_overflow():
    assert math.isfinite(log_beta(400.0, 500.0))
    assert log_beta(400.0, 500.0) == pytest.approx(float(mp.log(mp.beta(400, 500))), rel=1e-12)


@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
def test_domain_errors(bad):
    with pytest.raises(DomainError):
        gamma(bad)
    with pytest.raises(DomainError):
        beta(bad, 1.0)


@given(st.floats(min_value=0.05, max_value=1e5))
def test_stirling_remainder_bound(x):
    r, bound = stirling_remainder(x)
    assert 0 <= r <= bound
    assert r == pytest.approx(oracles.stirling_remainder(x), abs=1e-12)


@given(st.floats(min_value=1.05, max_value=6.0), st.integers(min_value=1, max_value=5000))
@settings(max_examples=40, deadline=None)
def test_power_zeta_tail(s, N):
    est = power_zeta_tail(s, N)
    ref = oracles.zeta_tail(s, N)
    assert abs(est.tail_value - ref) <= est.tail_error_bound + 1e-12 * ref
    lo = (N + 1) ** (1 - s) / (s - 1)
    hi = N ** (1 - s) / (s - 1)
    assert lo <= est.tail_value <= hi
    assert est.total == pytest.approx(float(mp.zeta(s)), rel=1e-12)


def test_power_zeta_tail_divergent():
    with pytest.raises(DomainError):
        power_zeta_tail(1.0, 10)


@given(st.floats(min_value=0.05, max_value=4.0), st.floats(min_value=0.05, max_value=0.999))
@settings(max_examples=40, deadline=None)
def test_geometric_power_sum(c, w):
    est = geometric_power_sum(c, w)
    ref = float(mp.polylog(1 - c, w * w))
    assert est.total == pytest.approx(ref, rel=1e-10)


@given(st.floats(min_value=0.5, max_value=2.0), st.floats(min_value=0.5, max_value=0.999))
@settings(max_examples=40, deadline=None)
def test_geometric_ratio_bracket(c, w):
    assert 0.2 <= geometric_power_sum_ratio(c, w) <= 5.0


@pytest.mark.parametrize("c", [1.0, 2.0])
@pytest.mark.parametrize("w", [0.5, 0.9, 0.99, 0.999])
def test_geometric_ratio_closed_form(c, w):
    assert geometric_power_sum_ratio(c, w) == pytest.approx(w * w, abs=1e-12)
