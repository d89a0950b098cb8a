"""Hilbert-type operators from functions on (0, inf) to sequences.

The parametric operator is

    (Tf)(n) = n^((theta2 - 1 + beta theta2)/p)
              * int x^(((theta1 - 1) + alpha theta1)/q - alpha theta1) f(x)
                    / (x^theta1 + n^theta2)^lam dx.

On a power piece c x^e over (a, b] the substitution t = x^theta1 / n^theta2
turns the integral into

    (c / theta1) n^E int_{a^theta1 n^-theta2}^{b^theta1 n^-theta2} t^(u-1) (1+t)^-lam dt

with u = (gamma + 1)/theta1, gamma the total x-exponent, and
E = (theta2 - 1 + beta theta2)/p + theta2 (u - lam).  All n are then
integrated in one vectorised quadrature sweep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import binom

from ._errors import DivergentIntegralError, DomainError, NonConvergenceError
from .measures import UnitIntervalMeasure, log_moment, shift_density
from .piecewise import PiecewisePowerFunction
from .quadrature import integrate_many
from .specfun import beta as beta_fn
from .specfun import power_zeta_tail

__all__ = [
    "OperatorParams",
    "TailDescriptor",
    "SequenceWindow",
    "CompletedNorm",
    "apply_parametric",
    "apply_parametric_raw",
    "apply_measure_kernel",
    "output_tail_exponents",
    "schur_weight_w1",
    "schur_weight_w2",
    "sharp_norm",
    "fit_power_tail",
    "lp_norm_completed",
    "p2_matrix_norm",
]

APPLY_REL_TOL = 1e-9


@dataclass(frozen=True)
class OperatorParams:
    """Parameters (p, lam, theta1, theta2, alpha, beta) of the operator family."""

    p: float
    lam: float
    theta1: float = 1.0
    theta2: float = 1.0
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        for name in ("p", "lam", "theta1", "theta2", "alpha", "beta"):
            v = getattr(self, name)
            if not isinstance(v, (int, float, np.floating, np.integer)) or not math.isfinite(v):
                raise DomainError(f"{name} must be a finite real, got {v!r}")
            object.__setattr__(self, name, float(v))
        errors = admissibility_errors(self.p, self.lam, self.theta1, self.theta2,
                                      self.alpha, self.beta)
        if errors:
            raise DomainError("; ".join(errors))

    @classmethod
    def critical(cls, p, theta1=1.0, theta2=1.0, alpha=0.0, beta=0.0):
        """Parameters with lam at the boundedness threshold 1 + (beta - alpha)/p."""
        return cls(p, 1.0 + (beta - alpha) / p, theta1, theta2, alpha, beta)

    @property
    def q(self) -> float:
        return self.p / (self.p - 1.0)

    @property
    def threshold(self) -> float:
        return 1.0 + (self.beta - self.alpha) / self.p

    @property
    def is_critical(self) -> bool:
        return abs(self.lam - self.threshold) <= 1e-12 * max(1.0, abs(self.threshold))

    def with_lam(self, lam: float) -> "OperatorParams":
        return replace(self, lam=lam)

    def as_dict(self) -> dict:
        return {"p": self.p, "lam": self.lam, "theta1": self.theta1,
                "theta2": self.theta2, "alpha": self.alpha, "beta": self.beta}


def admissibility_errors(p, lam, theta1, theta2, alpha, beta) -> list:
    """Messages for every violated parameter constraint (empty when admissible)."""
    out = []
    if not p > 1:
        out.append(f"p must exceed 1 (got {p})")
        return out
    if not lam > 0:
        out.append(f"lam must be positive (got {lam})")
    for name, v in (("theta1", theta1), ("theta2", theta2)):
        if not 0 < v <= 1:
            out.append(f"{name} must lie in (0, 1] (got {v})")
    for name, v in (("alpha", alpha), ("beta", beta)):
        if not -1 < v < p - 1:
            out.append(f"{name} must lie in (-1, p-1) = (-1, {p - 1:g}) (got {v})")
    return out


def _require_critical(params: OperatorParams):
    if not params.is_critical:
        raise DomainError(
            f"operation needs lam at the threshold {params.threshold:g}, got lam={params.lam:g}")


# --------------------------------------------------------------------------
# pointwise application


@dataclass(frozen=True)
class _PieceExponents:
    c: float
    a: float
    b: float
    u: float
    E: float


def _piece_exponents(p, lam, theta1, theta2, alpha, beta, f: PiecewisePowerFunction):
    q = p / (p - 1.0)
    base = ((theta1 - 1.0) + alpha * theta1) / q - alpha * theta1
    weight = ((theta2 - 1.0) + beta * theta2) / p
    out = []
    for pc in f.pieces:
        u = (base + pc.e + 1.0) / theta1
        if pc.a == 0.0 and u <= 0.0:
            raise DivergentIntegralError(
                f"integrand ~ x^{theta1 * u - 1:g} at 0 on piece ({pc.a:g}, {pc.b:g}]: "
                "the integral diverges")
        if math.isinf(pc.b) and lam - u <= 0.0:
            raise DivergentIntegralError(
                f"integrand ~ x^{theta1 * (u - lam) - 1:g} at infinity on piece "
                f"({pc.a:g}, {pc.b:g}]: the integral diverges")
        out.append(_PieceExponents(pc.c, pc.a, pc.b, u, weight + theta2 * (u - lam)))
    return out


def _flatten(exponent):
    # smooth integer powers need no endpoint substitution
    if exponent < 0.0 or (exponent != round(exponent) and exponent < 4.0):
        return exponent
    return 0.0


def apply_parametric_raw(p, lam, theta1, theta2, alpha, beta, f: PiecewisePowerFunction,
                         n, rel_tol: float = APPLY_REL_TOL) -> np.ndarray:
    """(Tf)(n) for an array of n, without admissibility checks on the parameters.

    Used directly for boundary parameter values (alpha = beta outside (-1, p-1)).
    """
    n = np.atleast_1d(np.asarray(n, dtype=float))
    if np.any(n < 1) or np.any(n != np.round(n)):
        raise DomainError("n must be a positive integer")
    pieces = _piece_exponents(p, lam, theta1, theta2, alpha, beta, f)
    out = np.zeros(n.shape)
    if not pieces:
        return out
    ntheta = n ** -theta2
    lows, highs, U, left, right = [], [], [], [], []
    for pe in pieces:
        lo = pe.a ** theta1 * ntheta
        hi = np.full(n.shape, math.inf) if math.isinf(pe.b) else pe.b ** theta1 * ntheta
        lows.append(lo)
        highs.append(hi)
        U.append(np.full(n.shape, pe.u))
        left.append(np.full(n.shape, _flatten(pe.u - 1.0) if pe.a == 0.0 else 0.0))
        right.append(np.full(n.shape, lam + 1.0 - pe.u if math.isinf(pe.b) else 0.0))
    lows = np.concatenate(lows)
    highs = np.concatenate(highs)
    U = np.concatenate(U)

    def integrand(t, i):
        return np.exp((U[i] - 1.0) * np.log(t) - lam * np.log1p(t))

    res = integrate_many(integrand, lows, highs, np.concatenate(left), np.concatenate(right),
                         rel_tol=rel_tol, breakpoints=[1.0])
    res.raise_if_failed()
    vals = res.values.reshape(len(pieces), n.size)
    for k, pe in enumerate(pieces):
        out += pe.c / theta1 * np.exp(pe.E * np.log(n)) * vals[k]
    return out


def apply_parametric(params: OperatorParams, f: PiecewisePowerFunction, n,
                     rel_tol: float = APPLY_REL_TOL):
    """(Tf)(n); ``n`` may be an integer or an array of integers.

    Raises DivergentIntegralError when the defining integral is infinite (for
    instance lam below the threshold with slowly decaying f).
    """
    f.norm_p(params.p)  # f must lie in L^p
    out = apply_parametric_raw(params.p, params.lam, params.theta1, params.theta2,
                               params.alpha, params.beta, f, n, rel_tol)
    return float(out[0]) if np.ndim(n) == 0 else out


def output_tail_exponents(params: OperatorParams, f: PiecewisePowerFunction):
    """Analytic (sigma, kappa) with (Tf)(n) ~ K n^-sigma (1 + d n^-kappa) as n -> inf."""
    pieces = _piece_exponents(params.p, params.lam, params.theta1, params.theta2,
                              params.alpha, params.beta, f)
    if not pieces:
        raise DomainError("zero function has no output tail")
    # every piece contributes n^E0 through its finite endpoints; infinite pieces add n^E
    E0 = pieces[0].E - params.theta2 * pieces[0].u
    exps = {E0, E0 - params.theta2}
    exps.update(pe.E for pe in pieces if math.isinf(pe.b))
    ordered = sorted(exps, reverse=True)
    return -ordered[0], ordered[0] - ordered[1]


def apply_measure_kernel(params: OperatorParams, m: UnitIntervalMeasure,
                         f: PiecewisePowerFunction, n, rel_tol: float = 1e-8):
    """n^(beta/p) int x^(-alpha/p) mu_lam[x + n] f(x) dx."""
    p, lam = params.p, params.lam
    nu = shift_density(m, lam - 1.0)  # must be finite
    n_arr = np.atleast_1d(np.asarray(n, dtype=float))
    if np.any(n_arr < 1) or np.any(n_arr != np.round(n_arr)):
        raise DomainError("n must be a positive integer")
    f.norm_p(p)
    out = np.zeros(n_arr.shape)
    if m.is_zero or not f.pieces:
        return float(out[0]) if np.ndim(n) == 0 else out
    r_end = nu.endpoint_exponent()
    # mu_lam[z] decays like z^-(r+1) for a density (1-t)^r at t = 1, faster otherwise
    moment_decay = (r_end + 1.0) if r_end is not None else 4.0
    a_exp = -params.alpha / p
    for pc in f.pieces:
        left = _flatten(a_exp + pc.e) if pc.a == 0.0 else 0.0
        right = None
        if math.isinf(pc.b):
            right = moment_decay - a_exp - pc.e
            if right <= 1.0:
                raise DivergentIntegralError("x^(-alpha/p) f(x) mu_lam[x+n] not integrable at infinity")

        def integrand(x, i, pc=pc):
            z = x + n_arr[i]
            with np.errstate(divide="ignore"):
                lm = log_moment(m, z, lam, rel_tol=min(1e-10, rel_tol * 1e-2))
            return pc.c * np.exp((a_exp + pc.e) * np.log(x) + lm)

        res = integrate_many(integrand, np.full(n_arr.shape, pc.a), np.full(n_arr.shape, pc.b),
                             left, right, rel_tol=rel_tol, scale=max(1.0, pc.a))
        res.raise_if_failed()
        out += res.values
    out *= n_arr ** (params.beta / p)
    return float(out[0]) if np.ndim(n) == 0 else out


# --------------------------------------------------------------------------
# Schur weights and the sharp constant


def _beta_constant(params: OperatorParams) -> float:
    p = params.p
    return beta_fn((1.0 + params.beta) / p, (p - 1.0 - params.alpha) / p)


def sharp_norm(params: OperatorParams) -> float:
    """B((1+beta)/p, (p-1-alpha)/p) / (theta2^(1/p) theta1^(1/q))."""
    _require_critical(params)
    return _beta_constant(params) / (params.theta2 ** (1.0 / params.p)
                                     * params.theta1 ** (1.0 / params.q))


def schur_weight_w1(params: OperatorParams, n, rel_tol: float = 1e-11):
    """Integral over x of the row weight; equals B(...)/theta1 for every n."""
    _require_critical(params)
    p, t1, t2, al, be = params.p, params.theta1, params.theta2, params.alpha, params.beta
    lam = params.lam
    n_arr = np.atleast_1d(np.asarray(n, dtype=float))
    x_exp = t1 - 1.0 - t1 * (1.0 + al) / p
    n_exp = t2 * (1.0 + be) / p
    decay = 1.0 + t1 * (1.0 + be) / p

    def integrand(x, i):
        nn = n_arr[i]
        return np.exp(x_exp * np.log(x) + n_exp * np.log(nn)
                      - lam * np.log(x ** t1 + nn ** t2))

    # the integrand changes regime at x^theta1 = n^theta2
    bps = [[nn ** (t2 / t1)] for nn in n_arr]
    res = integrate_many(integrand, np.zeros(n_arr.shape), np.full(n_arr.shape, math.inf),
                         _flatten(x_exp), decay, rel_tol=rel_tol, breakpoints=bps)
    res.raise_if_failed()
    return float(res.values[0]) if np.ndim(n) == 0 else res.values


def schur_weight_w2(params: OperatorParams, x: float, n_terms: int | None = None,
                    rel_tol: float = 1e-11) -> float:
    """Column weight: sum over n, bounded by B(...)/theta2.

    The first ``n_terms`` summands are added explicitly; the remainder is the
    integral of the summand from n_terms to infinity less half the last term
    (trapezoid correction), which lies inside the integral-comparison bracket
    for the eventually decreasing summand.
    """
    _require_critical(params)
    x = float(x)
    if not x > 0:
        raise DomainError("x must be positive")
    p, t1, t2, al, be = params.p, params.theta1, params.theta2, params.alpha, params.beta
    lam = params.lam
    n_exp = t2 - 1.0 - t2 * (p - 1.0 - be) / p
    x_part = t1 * (p - 1.0 - al) / p * math.log(x)
    xt = x ** t1
    peak = x ** (t1 / t2)
    if n_terms is None:
        n_terms = int(min(max(10_000, 100 * peak), 5_000_000))

    def g(nn):
        return np.exp(n_exp * np.log(nn) + x_part - lam * np.log(xt + nn ** t2))

    n = np.arange(1, n_terms + 1, dtype=float)
    partial = float(np.sum(g(n)[::-1]))
    decay = 1.0 + t2 * (p - 1.0 - al) / p
    res = integrate_many(lambda s, _i: g(s), [float(n_terms)], [math.inf], 0.0, decay,
                         rel_tol=rel_tol, scale=max(float(n_terms), peak))
    res.raise_if_failed()
    tail = float(res.values[0]) - 0.5 * float(g(np.array([float(n_terms)]))[0])
    return partial + tail


# --------------------------------------------------------------------------
# sequences and tail completion


@dataclass(frozen=True)
class TailDescriptor:
    """v_n ~ constant * n^-exponent * (1 + correction * n^-correction_exponent) for n > N."""

    exponent: float
    constant: float
    correction_exponent: float | None = None
    correction: float = 0.0
    analytic_exponent: float | None = None

    def __call__(self, n):
        n = np.asarray(n, dtype=float)
        out = self.constant * n ** -self.exponent
        if self.correction_exponent is not None:
            out = out * (1.0 + self.correction * n ** -self.correction_exponent)
        return out


@dataclass(frozen=True)
class SequenceWindow:
    """Leading values v_1..v_N of a sequence plus an optional tail model."""

    values: np.ndarray
    tail: TailDescriptor | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise DomainError("values must be a nonempty 1-D array")
        if not np.all(np.isfinite(v)):
            raise DomainError("sequence values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def N(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class CompletedNorm:
    value: float
    partial_pth: float
    tail_pth: float
    tail_error_bound: float
    lower_bound_only: bool

    @property
    def tail_fraction(self) -> float:
        total = self.partial_pth + self.tail_pth
        return self.tail_pth / total if total > 0 else 0.0

    def __float__(self):
        return self.value


def fit_power_tail(n, v, correction_exponent: float | None = None,
                   analytic_exponent: float | None = None) -> TailDescriptor:
    """Least-squares fit of v_n ~ K n^-sigma (1 + d n^-kappa) on the given points.

    With ``correction_exponent`` None only (sigma, K) are fitted on log v.
    Otherwise kappa is held fixed, (K, K d) enter linearly and sigma is found
    by a one-dimensional search on the relative residual.
    """
    n = np.asarray(n, dtype=float)
    v = np.asarray(v, dtype=float)
    if n.size < 3 or np.any(v <= 0):
        raise NonConvergenceError("tail fit needs at least 3 positive values")
    ln = np.log(n)
    slope, icpt = np.polyfit(ln, np.log(v), 1)
    if correction_exponent is None:
        return TailDescriptor(-slope, math.exp(icpt), analytic_exponent=analytic_exponent)
    kap = float(correction_exponent)

    def solve(sigma):
        base = n ** -sigma
        A = np.column_stack([base, base * n ** -kap]) / v[:, None]
        coef, *_ = np.linalg.lstsq(A, np.ones_like(v), rcond=None)
        resid = A @ coef - 1.0
        return float(resid @ resid), coef

    # a wide window admits the mirror solution sigma - kappa with the roles of
    # the two powers swapped, so search near the plain log-log slope only
    s0 = -slope
    grid = np.linspace(s0 - 0.5 * kap, s0 + 0.5 * kap, 41)
    best = grid[int(np.argmin([solve(s)[0] for s in grid]))]
    step = grid[1] - grid[0]
    opt = minimize_scalar(lambda s: solve(s)[0], bounds=(best - step, best + step),
                          method="bounded", options={"xatol": 1e-12})
    sigma = float(opt.x)
    _, (K, Kd) = solve(sigma)
    if not K > 0:
        raise NonConvergenceError("tail fit produced a nonpositive constant")
    return TailDescriptor(sigma, float(K), kap, float(Kd / K), analytic_exponent)


def lp_norm_completed(seq: SequenceWindow, p: float) -> CompletedNorm:
    """(sum_{n<=N} |v_n|^p + tail)^(1/p), the tail summed from the descriptor."""
    p = float(p)
    if not p >= 1:
        raise DomainError("p must be at least 1")
    v = np.abs(seq.values)
    partial = float(np.sum(np.sort(v ** p)))
    if seq.tail is None:
        return CompletedNorm(partial ** (1.0 / p), partial, 0.0, 0.0, True)
    td = seq.tail
    s = td.exponent * p
    if not s > 1.0:
        raise DomainError(f"tail exponent sigma*p = {s:g} <= 1: the l^p norm diverges")
    N = seq.N
    Kp = td.constant ** p
    tail = 0.0
    err = 0.0
    if td.correction_exponent is None or td.correction == 0.0:
        est = power_zeta_tail(s, N)
        tail, err = Kp * est.tail_value, Kp * est.tail_error_bound
    else:
        kap, d = td.correction_exponent, td.correction
        if not abs(d) * (N + 1) ** -kap < 1.0:
            raise DomainError("tail correction too large for a convergent expansion")
        # (1 + d n^-kappa)^p expanded binomially
        j = 0
        while True:
            cj = float(binom(p, j)) * d ** j
            est = power_zeta_tail(s + j * kap, N)
            term = Kp * cj * est.tail_value
            tail += term
            err += Kp * abs(cj) * est.tail_error_bound
            if j > 0 and abs(term) < 1e-16 * abs(tail) or j > 200:
                err += abs(term)
                break
            if p == round(p) and j >= p:
                break
            j += 1
    total = partial + tail
    return CompletedNorm(total ** (1.0 / p), partial, tail, err, False)


# --------------------------------------------------------------------------
# p = 2 matrix discretisation


def _kernel_block(kind, params, measure, rows, cols):
    """Matrix entries k(n, m) for output index n in ``rows`` and input index m in ``cols``."""
    n = rows[:, None]
    m = cols[None, :]
    if kind == "hilbert":
        return 1.0 / (m + n)
    p = params.p
    if kind == "parametric":
        t1, t2, al, be = params.theta1, params.theta2, params.alpha, params.beta
        x_exp = ((t1 - 1.0) + al * t1) / params.q - al * t1
        n_exp = ((t2 - 1.0) + be * t2) / p
        return n ** n_exp * m ** x_exp / (m ** t1 + n ** t2) ** params.lam
    if kind == "measure":
        z = (m + n).ravel()
        uniq, inv = np.unique(z, return_inverse=True)
        mom = np.exp(log_moment(measure, uniq, params.lam))[inv].reshape(n.shape[0], m.shape[1])
        return mom * n ** (params.beta / p) * m ** (-params.alpha / p)
    raise DomainError(f"unknown kernel {kind!r}")


def p2_matrix_norm(kernel="hilbert", N: int = 4096, params: OperatorParams | None = None,
                   measure: UnitIntervalMeasure | None = None, rel_tol: float = 1e-10,
                   max_iter: int = 100_000) -> float:
    """Largest singular value of the N x N kernel matrix by power iteration.

    ``kernel`` is "hilbert" (1/(m+n)), "parametric" or "measure".  Symmetric
    kernels iterate on M, others on M^T M.  The start vector is all ones.
    """
    N = int(N)
    if not 1 <= N <= 2 ** 14:
        raise DomainError("N must lie in [1, 2^14]")
    if kernel != "hilbert" and params is None:
        raise DomainError(f"kernel {kernel!r} needs params")
    if kernel == "measure" and measure is None:
        raise DomainError("measure kernel needs a measure")
    idx = np.arange(1, N + 1, dtype=float)
    symmetric = kernel == "hilbert" or (
        kernel == "parametric" and params.theta1 == params.theta2
        and params.alpha == params.beta and params.p == 2.0) or (
        kernel == "measure" and params.alpha == -params.beta)
    dense = N <= 4096
    M = _kernel_block(kernel, params, measure, idx, idx) if dense else None
    block = 1024

    def mul(x, transpose=False):
        if dense:
            return (M.T if transpose else M) @ x
        # row blocks are generated on the fly so the matrix is never stored
        out = np.zeros(N)
        for s in range(0, N, block):
            B = _kernel_block(kernel, params, measure, idx[s:s + block], idx)
            if transpose:
                out += B.T @ x[s:s + block]
            else:
                out[s:s + block] = B @ x
        return out

    x = np.ones(N) / math.sqrt(N)
    prev = 0.0
    for _ in range(max_iter):
        y = mul(x) if symmetric else mul(mul(x), transpose=True)
        est = float(np.linalg.norm(y))
        if est == 0.0:
            return 0.0
        x = y / est
        if abs(est - prev) <= rel_tol * est:
            return est if symmetric else math.sqrt(est)
        prev = est
    raise NonConvergenceError(f"power iteration did not converge in {max_iter} steps",
                              estimate=prev)
