"""Test families and the norm estimates built on them.

* f_tilde(eps): eps^(1/p) x^-(1+theta1 eps)/p on [1, inf); its output under the
  critical operator has a power-law tail, which gives lower bounds for the norm.
* below the threshold the same input has a divergent output sum whose growth
  exponent is fitted on a ladder of truncation points.
* f_w / g_w: geometric step functions used in the duality pairing against the
  measure kernel operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import gammaincc, gamma as gamma_fn

from ._errors import DivergentIntegralError, DomainError, NonConvergenceError
from .measures import UnitIntervalMeasure, _tail_u, shift_density
from .operators import (
    OperatorParams,
    SequenceWindow,
    TailDescriptor,
    _require_critical,
    apply_parametric,
    apply_parametric_raw,
    fit_power_tail,
    lp_norm_completed,
    output_tail_exponents,
    sharp_norm,
)
from .piecewise import PiecewisePowerFunction, PowerPiece
from .quadrature import integrate_many
from .specfun import beta as beta_fn
from .specfun import power_zeta_tail

__all__ = [
    "ExtremalFamily",
    "build_family",
    "L_epsilon",
    "RayleighEstimate",
    "rayleigh_lower_bound",
    "DivergenceFit",
    "divergence_exponent_fit",
    "threshold_partial_sums",
    "output_norm",
    "DualityResult",
    "duality_pairing",
    "BoundaryBlowup",
    "boundary_gamma_blowup",
    "hardy_coefficient_sequence",
    "DEFAULT_EPS_LADDER",
]

DEFAULT_EPS_LADDER = (0.5, 0.2, 0.1, 0.05)
_SERIES_CUTOFF = 1e-16


@dataclass(frozen=True)
class ExtremalFamily:
    """One member of a test family together with its exact norm."""

    kind: str
    parameters: dict
    p: float
    realized: object  # PiecewisePowerFunction, or a callable n -> g_n
    exact_norm: float

    def sequence(self, n):
        if self.kind != "g_w":
            raise DomainError("only g_w is a sequence family")
        return self.realized(np.asarray(n, dtype=float))


def _f_tilde(eps, theta1, p):
    return PiecewisePowerFunction([PowerPiece(1.0, math.inf, eps ** (1.0 / p),
                                              -(1.0 + theta1 * eps) / p)])


def build_family(kind: str, p: float, eps: float | None = None, theta1: float = 1.0,
                 w: float | None = None, max_steps: int | None = None) -> ExtremalFamily:
    """Construct f_tilde, f_hat, f_w or g_w.

    For g_w, ``p`` is the exponent of the space the sequence lives in (the
    conjugate q in the pairing).  f_w is realised with its first ``max_steps``
    steps (default: until the step values drop below 1e-16 relative); the
    reported exact norm is always that of the infinite family.
    """
    p = float(p)
    if not p > 1:
        raise DomainError("p must exceed 1")
    if kind in ("f_tilde", "f_hat"):
        if eps is None or not eps > 0:
            raise DomainError("eps must be positive")
        if kind == "f_hat":
            theta1 = 1.0
        if not 0 < theta1 <= 1:
            raise DomainError("theta1 must lie in (0, 1]")
        f = _f_tilde(float(eps), float(theta1), p)
        return ExtremalFamily(kind, {"eps": eps, "theta1": theta1}, p, f,
                              theta1 ** (-1.0 / p))
    if kind in ("f_w", "g_w"):
        if w is None or not 0 < w < 1:
            raise DomainError("w must lie in (0, 1)")
        w = float(w)
        scale = (-math.expm1(2.0 * math.log(w))) ** (1.0 / p)
        ratio = w ** (2.0 / p)
        if kind == "g_w":
            return ExtremalFamily(kind, {"w": w}, p,
                                  lambda n: scale * ratio ** (n - 1.0), 1.0)
        if max_steps is None:
            max_steps = int(math.ceil(math.log(_SERIES_CUTOFF) / math.log(ratio))) + 1
        k = np.arange(1, max_steps + 1)
        pieces = [PowerPiece(float(kk), float(kk + 1), scale * ratio ** (kk - 1), 0.0)
                  for kk in k]
        return ExtremalFamily(kind, {"w": w}, p, PiecewisePowerFunction(pieces), 1.0)
    raise DomainError(f"unknown family kind {kind!r}")


def L_epsilon(params: OperatorParams, eps: float) -> float:
    """B((1+beta+eps)/p, (p-1-alpha-eps)/p)."""
    _require_critical(params)
    p = params.p
    if not 0 < eps < p - 1 - params.alpha:
        raise DomainError(f"eps must lie in (0, p-1-alpha) = (0, {p - 1 - params.alpha:g})")
    return beta_fn((1.0 + params.beta + eps) / p, (p - 1.0 - params.alpha - eps) / p)


# --------------------------------------------------------------------------
# lower bounds at the threshold


@dataclass(frozen=True)
class RayleighEstimate:
    eps: float
    N: int
    value: float  # ||T f|| / ||f||
    output_norm: float
    input_norm: float
    tail_fraction: float
    tail_error_bound: float
    fitted_exponent: float
    analytic_exponent: float
    sharp: float

    @property
    def ratio_to_sharp(self) -> float:
        return self.value / self.sharp

    def __float__(self):
        return self.value


def _completed_output(params, f, N, rel_tol):
    n = np.arange(1, N + 1, dtype=float)
    v = apply_parametric(params, f, n, rel_tol=rel_tol)
    sigma, kappa = output_tail_exponents(params, f)
    sel = n >= N / 10.0
    tail = fit_power_tail(n[sel], v[sel], correction_exponent=kappa, analytic_exponent=sigma)
    if abs(tail.exponent - sigma) > 0.02 * sigma:
        raise NonConvergenceError(
            f"fitted tail exponent {tail.exponent:.6g} disagrees with the analytic {sigma:.6g}")
    return lp_norm_completed(SequenceWindow(v, tail), params.p), tail


def rayleigh_lower_bound(params: OperatorParams, eps: float, N: int = 10_000,
                         rel_tol: float = 1e-10) -> RayleighEstimate:
    """||T f_tilde|| / ||f_tilde|| with the output tail completed from a fitted power law."""
    _require_critical(params)
    L_epsilon(params, eps)  # range check
    if N < 1000:
        raise DomainError("N must be at least 1000")
    fam = build_family("f_tilde", params.p, eps=eps, theta1=params.theta1)
    norm, tail = _completed_output(params, fam.realized, int(N), rel_tol)
    return RayleighEstimate(
        eps=float(eps), N=int(N), value=norm.value / fam.exact_norm,
        output_norm=norm.value, input_norm=fam.exact_norm,
        tail_fraction=norm.tail_fraction, tail_error_bound=norm.tail_error_bound,
        fitted_exponent=tail.exponent, analytic_exponent=tail.analytic_exponent,
        sharp=sharp_norm(params))


def output_norm(params: OperatorParams, f: PiecewisePowerFunction, N: int = 10_000,
                rel_tol: float = 1e-10) -> float:
    """Tail-completed ||T f||_p for a general piecewise power input."""
    norm, _ = _completed_output(params, f, int(N), rel_tol)
    return norm.value


# --------------------------------------------------------------------------
# below the threshold


@dataclass(frozen=True)
class DivergenceFit:
    fitted_delta: float
    predicted_delta: float
    ladder: tuple
    partial_sums: tuple
    fit_points: tuple

    @property
    def relative_error(self) -> float:
        return abs(self.fitted_delta - self.predicted_delta) / self.predicted_delta

    def __iter__(self):
        return iter((self.fitted_delta, self.predicted_delta))


def divergence_exponent_fit(params: OperatorParams, eps: float,
                            N_ladder: Sequence[int] = (1000, 2000, 5000, 10_000, 20_000,
                                                       50_000, 100_000),
                            rel_tol: float = 1e-9) -> DivergenceFit:
    """Growth exponent of S_N = sum_{n<=N} |(T f_tilde)(n)|^p for lam below the threshold.

    The slope of log S_N against log N is fitted over the ladder points in the
    top decade (N >= N_max/10), where the lower-order terms of S_N have
    decayed most.  The prediction is p theta2 (threshold - lam - eps/p).
    """
    p, t2 = params.p, params.theta2
    gap = params.threshold - params.lam
    if not gap > 0:
        raise DomainError("divergence fit needs lam below the threshold")
    if not 0 < eps < p * gap:
        raise DomainError(f"eps must lie in (0, {p * gap:g}) for a divergent sum")
    ladder = sorted(int(N) for N in N_ladder)
    if len(ladder) < 2 or ladder[0] < 1:
        raise DomainError("ladder needs at least two positive integers")
    fam = build_family("f_tilde", p, eps=eps, theta1=params.theta1)
    n = np.arange(1, ladder[-1] + 1, dtype=float)
    v = apply_parametric(params, fam.realized, n, rel_tol=rel_tol)
    cum = np.cumsum(np.abs(v) ** p)
    S = np.array([cum[N - 1] for N in ladder])
    Ns = np.array(ladder, dtype=float)
    sel = Ns >= Ns[-1] / 10.0
    if sel.sum() < 2:
        sel[-2:] = True
    slope = float(np.polyfit(np.log(Ns[sel]), np.log(S[sel]), 1)[0])
    predicted = p * t2 * (gap - eps / p)
    return DivergenceFit(slope, predicted, tuple(ladder), tuple(float(s) for s in S),
                         tuple(int(x) for x in Ns[sel]))


def threshold_partial_sums(params: OperatorParams, eps: float, N_ladder: Sequence[int],
                           rel_tol: float = 1e-9) -> np.ndarray:
    """S_N = sum_{n<=N} |(T f_tilde)(n)|^p on the ladder, for any lam."""
    fam = build_family("f_tilde", params.p, eps=eps, theta1=params.theta1)
    ladder = sorted(int(N) for N in N_ladder)
    v = apply_parametric(params, fam.realized, np.arange(1, ladder[-1] + 1, dtype=float),
                         rel_tol=rel_tol)
    cum = np.cumsum(np.abs(v) ** params.p)
    return np.array([cum[N - 1] for N in ladder])


# --------------------------------------------------------------------------
# duality pairing


@dataclass(frozen=True)
class DualityResult:
    w: float
    pairing: float
    pairing_error: float
    surrogate: float
    tail_at_w: float


def _weighted_geometric(r, power, lead=0.0):
    """sum_{n>=1} n^power r^(n + lead) for an array of ratios 0 <= r < 1."""
    r = np.asarray(r, dtype=float)
    out = np.zeros(r.shape)
    if power == 0.0:
        with np.errstate(divide="ignore", invalid="ignore"):
            out = r / (1.0 - r)
        return out * r ** lead
    active = np.flatnonzero(r > 0)
    block = 2048
    start = 1
    log_r = np.log(r[active]) if active.size else np.zeros(0)
    while active.size:
        n = np.arange(start, start + block, dtype=float)
        terms = np.exp(power * np.log(n)[None, :] + np.outer(log_r, n))
        out[active] += terms.sum(axis=1)
        last = terms[:, -1]
        done = (last < _SERIES_CUTOFF * out[active]) & (n[-1] * -log_r > max(power, 0.0))
        active, log_r = active[~done], log_r[~done]
        start += block
    return out * r ** lead


def _step_transform(t, w, p, alpha):
    """B(t) = sum_k f_k int_k^{k+1} x^(-alpha/p) t^(x-1) dx for the step family f_w."""
    t = np.asarray(t, dtype=float)
    a = alpha / p
    scale = (-math.expm1(2.0 * math.log(w))) ** (1.0 / p)
    rho = w ** (2.0 / p)
    s = -np.log(t)  # > 0
    out = np.zeros(t.shape)
    if a == 0.0:
        # int_k^{k+1} t^(x-1) dx = t^(k-1) (t - 1)/ln t
        return scale * (-np.expm1(-s)) / s / (1.0 - rho * t)
    # int_k^{k+1} x^-a e^{-s x} dx = s^(a-1) Gamma(1-a) [Q(1-a, k s) - Q(1-a, (k+1) s)]
    g = gamma_fn(1.0 - a)
    k = 1
    while True:
        piece = (gammaincc(1.0 - a, k * s) - gammaincc(1.0 - a, (k + 1) * s))
        term = scale * rho ** (k - 1) * g * s ** (a - 1.0) * piece / t
        out += term
        if np.all(term <= _SERIES_CUTOFF * out) and rho ** k < _SERIES_CUTOFF:
            break
        if k > 10_000_000:
            raise NonConvergenceError("step-function series did not converge")
        k += 1
    return out


def duality_pairing(params: OperatorParams, m: UnitIntervalMeasure, w: float,
                    rel_tol: float = 1e-9) -> DualityResult:
    """sum_n g_n (H_mu f_w)(n) and the surrogate nu([w, 1)) / (1 - w^2)^threshold.

    By Fubini the pairing is int A(t) B(t) dnu(t) with nu = (1-t)^(lam-1) dmu,
    A(t) = sum_n g_n n^(beta/p) t^n and B the step transform of f_w.
    """
    if not 0 < w < 1:
        raise DomainError("w must lie in (0, 1)")
    p, q = params.p, params.q
    nu = shift_density(m, params.lam - 1.0)
    g_scale = (-math.expm1(2.0 * math.log(w))) ** (1.0 / q)
    g_ratio = w ** (2.0 / q)

    def AB(t):
        t = np.asarray(t, dtype=float)
        A = g_scale / g_ratio * _weighted_geometric(g_ratio * t, params.beta / p)
        return A * _step_transform(t, w, p, params.alpha)

    total = 0.0
    err = 0.0
    for t0, mass in nu.atoms:
        if t0 > 0:
            total += mass * float(AB(np.array([t0]))[0])
    if nu.pieces:
        lows, highs, coef, expo = [], [], [], []
        for a, b, c, r in nu.pieces:
            lows.append(1.0 - b)
            highs.append(1.0 - a)
            coef.append(c)
            expo.append(r)
        coef = np.array(coef)
        expo = np.array(expo)
        # in u = 1 - t the density is c u^r; the product A B peaks near u ~ 1 - w
        bps = [[x for x in (0.25 * (1 - w), 1 - w, 4 * (1 - w)) if lo < x < hi]
               for lo, hi in zip(lows, highs)]
        left = np.array([r if lo == 0.0 else 0.0 for r, lo in zip(expo, lows)])

        def integrand(u, i):
            return coef[i] * u ** expo[i] * AB(1.0 - u)

        res = integrate_many(integrand, lows, highs, left, 0.0, rel_tol=rel_tol,
                             breakpoints=bps)
        res.raise_if_failed()
        total += float(res.values.sum())
        err += float(res.errors.sum())
    tail_w = float(_tail_u(nu, np.array([1.0 - w]))[0])
    surrogate = tail_w / (-math.expm1(2.0 * math.log(w))) ** params.threshold
    return DualityResult(float(w), total, err, surrogate, tail_w)


# --------------------------------------------------------------------------
# boundary exponents


@dataclass(frozen=True)
class BoundaryBlowup:
    p: float
    gamma: float
    values: list  # (eps, ||H f_hat||_p^p)
    verdict: str  # "divergent" | "increasing" | "not-increasing"
    growth: float  # last / first

    @property
    def strictly_increasing(self) -> bool:
        vals = [v for _, v in self.values]
        return bool(len(vals) > 1 and all(b > a for a, b in zip(vals, vals[1:])))


def boundary_gamma_blowup(p: float, gamma: float, eps_ladder=DEFAULT_EPS_LADDER,
                          N: int = 10_000, rel_tol: float = 1e-10) -> BoundaryBlowup:
    """||H_gamma f_hat_eps||_p^p along a decreasing eps ladder.

    H_gamma has lam = theta1 = theta2 = 1 and alpha = beta = gamma.  For
    gamma < -1 the defining integral is infinite once eps < -(1 + gamma), so
    the verdict is "divergent" at once.  For gamma >= p - 1 the output decays
    like n^(gamma/p - 1), which is not p-summable: every value is +inf.
    """
    p = float(p)
    gamma = float(gamma)
    ladder = [float(e) for e in eps_ladder]
    if not p > 1:
        raise DomainError("p must exceed 1")
    if not ladder or any(e <= 0 for e in ladder) or any(b >= a for a, b in zip(ladder, ladder[1:])):
        raise DomainError("eps ladder must be positive and strictly decreasing")
    if gamma < -1.0:
        return BoundaryBlowup(p, gamma, [], "divergent", math.inf)
    if -1.0 < gamma < p - 1.0:
        raise DomainError("gamma must be -1 or at least p-1")
    values = []
    for eps in ladder:
        u = 1.0 - (1.0 + gamma + eps) / p
        if u <= 0.0:
            # (H f)(n) ~ n^(gamma/p - 1): the p-th power sum diverges
            values.append((eps, math.inf))
            continue
        f = _f_tilde(eps, 1.0, p)
        n = np.arange(1, N + 1, dtype=float)
        v = apply_parametric_raw(p, 1.0, 1.0, 1.0, gamma, gamma, f, n, rel_tol=rel_tol)
        # exact expansion: v_n = eps^(1/p) n^-sigma [B(u, 1-u) - n^-u/u + ...]
        B = beta_fn(u, 1.0 - u)
        sigma = (1.0 + eps) / p
        tail = TailDescriptor(sigma, eps ** (1.0 / p) * B, u, -1.0 / (u * B), sigma)
        norm = lp_norm_completed(SequenceWindow(v, tail), p)
        values.append((eps, norm.partial_pth + norm.tail_pth))
    vals = [v for _, v in values]
    if any(math.isinf(v) for v in vals):
        verdict = "divergent"
    elif all(b > a for a, b in zip(vals, vals[1:])):
        verdict = "increasing"
    else:
        verdict = "not-increasing"
    growth = vals[-1] / vals[0] if vals[0] > 0 and math.isfinite(vals[0]) else math.inf
    return BoundaryBlowup(p, gamma, values, verdict, growth)


def hardy_coefficient_sequence(f: PiecewisePowerFunction, N: int) -> SequenceWindow:
    """c_n = int f(x)/(x + n + 1) dx for n = 0..N-1."""
    if N < 1:
        raise DomainError("N must be positive")
    params = OperatorParams(2.0, 1.0)
    v = apply_parametric(params, f, np.arange(1, N + 1, dtype=float))
    return SequenceWindow(v)
