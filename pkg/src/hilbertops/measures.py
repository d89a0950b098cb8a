"""Finite positive measures on [0, 1) built from atoms and power densities.

A measure is a list of atoms (t0, mass) plus density pieces c (1 - t)^r on
[a, b).  Tails mu([t, 1)) are exact closed forms.  Moments
mu_lambda[z] = int t^(z-1) (1 - t)^(lambda-1) dmu(t) are computed by
quadrature in the reflected variable u = 1 - t, which keeps the (1 - t)^r
singularity at u = 0 and avoids cancellation near t = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.special import logsumexp

from ._errors import DivergentIntegralError, DomainError
from .quadrature import integrate_many

__all__ = [
    "UnitIntervalMeasure",
    "CarlesonProfile",
    "MomentDecayProfile",
    "ShiftEquivalenceReport",
    "default_grid",
    "tail",
    "carleson_profile",
    "shift_density",
    "moment",
    "log_moment",
    "moment_via_parts",
    "moment_decay_profile",
    "carleson_shift_equivalence_check",
]

MOMENT_REL_TOL = 1e-10


@dataclass(frozen=True)
class UnitIntervalMeasure:
    """Atoms ``(t0, mass)`` plus density pieces ``(a, b, c, r)`` = c (1-t)^r on [a, b)."""

    atoms: tuple = ()
    pieces: tuple = ()

    def __post_init__(self):
        atoms = tuple((float(t), float(w)) for t, w in self.atoms)
        pieces = tuple(tuple(float(v) for v in pc) for pc in self.pieces)
        for t, w in atoms:
            if not 0.0 <= t < 1.0:
                raise DomainError(f"atom location {t} outside [0, 1)")
            if not w > 0.0 or math.isinf(w):
                raise DomainError(f"atom mass must be positive and finite, got {w}")
        for pc in pieces:
            if len(pc) != 4:
                raise DomainError(f"density piece needs (a, b, c, r), got {pc}")
            a, b, c, r = pc
            if not 0.0 <= a < b <= 1.0:
                raise DomainError(f"density interval [{a}, {b}) not inside [0, 1)")
            if not c > 0.0 or math.isinf(c):
                raise DomainError(f"density coefficient must be positive, got {c}")
            if not r > -1.0:
                raise DivergentIntegralError(
                    f"density (1-t)^{r} has infinite mass (exponent must exceed -1)")
        spans = sorted((a, b) for a, b, _, _ in pieces)
        for (a0, b0), (a1, b1) in zip(spans, spans[1:]):
            if a1 < b0:
                raise DomainError(f"density pieces [{a0},{b0}) and [{a1},{b1}) overlap")
        object.__setattr__(self, "atoms", tuple(sorted(atoms)))
        object.__setattr__(self, "pieces", tuple(sorted(pieces)))

    # constructors -------------------------------------------------------
    @classmethod
    def lebesgue(cls, c: float = 1.0):
        return cls(pieces=[(0.0, 1.0, c, 0.0)])

    @classmethod
    def power_density(cls, r: float, c: float = 1.0, a: float = 0.0, b: float = 1.0):
        return cls(pieces=[(a, b, c, r)])

    @classmethod
    def atom(cls, t0: float, mass: float = 1.0):
        return cls(atoms=[(t0, mass)])

    @classmethod
    def from_literal(cls, literal: dict):
        """Build from ``{"atoms": [[t, mass], ...], "pieces": [[a, b, c, r], ...]}``."""
        unknown = set(literal) - {"atoms", "pieces"}
        if unknown:
            raise DomainError(f"unknown measure keys: {sorted(unknown)}")
        return cls(atoms=literal.get("atoms", ()), pieces=literal.get("pieces", ()))

    def to_literal(self) -> dict:
        return {"atoms": [list(a) for a in self.atoms], "pieces": [list(p) for p in self.pieces]}

    def scaled(self, k: float):
        if not k > 0:
            raise DomainError("scale factor must be positive")
        return UnitIntervalMeasure([(t, k * w) for t, w in self.atoms],
                                   [(a, b, k * c, r) for a, b, c, r in self.pieces])

    @property
    def is_zero(self) -> bool:
        return not self.atoms and not self.pieces

    @property
    def total_mass(self) -> float:
        return float(_tail_u(self, np.array([1.0]))[0])

    def endpoint_exponent(self):
        """Smallest density exponent r among pieces reaching t = 1, or None."""
        rs = [r for a, b, c, r in self.pieces if b == 1.0]
        return min(rs) if rs else None

    def breakpoints_u(self):
        """Locations (in u = 1 - t) where the tail function is not smooth."""
        pts = {1.0 - t for t, _ in self.atoms}
        for a, b, _, _ in self.pieces:
            pts.update((1.0 - a, 1.0 - b))
        return sorted(p for p in pts if 0.0 < p < 1.0)


def _tail_u(m: UnitIntervalMeasure, u: np.ndarray) -> np.ndarray:
    """mu([1 - u, 1)) evaluated from the distance u to the endpoint."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    for t0, w in m.atoms:
        out += np.where(u >= 1.0 - t0, w, 0.0)
    for a, b, c, r in m.pieces:
        top = np.minimum(u, 1.0 - a)
        low = 1.0 - b
        k = r + 1.0
        val = c * (top ** k - low ** k) / k
        out += np.where(u > low, val, 0.0)
    return out


def tail(m: UnitIntervalMeasure, t):
    """mu([t, 1)), exact and nonincreasing in t."""
    t_arr = np.asarray(t, dtype=float)
    if np.any((t_arr < 0.0) | (t_arr >= 1.0)):
        raise DomainError("tail is defined for t in [0, 1)")
    out = _tail_u(m, 1.0 - t_arr)
    return float(out) if np.ndim(t) == 0 else out


def default_grid(kmax: int = 40) -> np.ndarray:
    """Geometric grid t = 1 - 2^-k, k = 0..kmax."""
    return 1.0 - 2.0 ** -np.arange(kmax + 1, dtype=float)


@dataclass(frozen=True)
class CarlesonProfile:
    """Sampled ratios mu([t, 1)) / (1 - t)^s and the resulting verdicts.

    ``vanishing_verdict`` holds when the last five ratios strictly decrease
    (or are already zero) and the final one is below 1% of the maximum.
    ``bounded_verdict`` holds when the log-log slope of the ratio against
    1 - t over the last five grid points is >= -0.01, i.e. the ratio is not
    blowing up as t -> 1.
    """

    exponent: float
    constant: float
    profile: list
    vanishing_verdict: bool
    terminal_ratio: float
    terminal_slope: float
    bounded_verdict: bool

    def __post_init__(self):
        if any(r > self.constant for _, r in self.profile):
            raise ValueError("constant must dominate every sampled ratio")


def carleson_profile(m: UnitIntervalMeasure, s: float, grid=None) -> CarlesonProfile:
    if not s > 0:
        raise DomainError("Carleson exponent s must be positive")
    if grid is None:
        u = 2.0 ** -np.arange(41, dtype=float)
        t = 1.0 - u
    else:
        t = np.asarray(grid, dtype=float)
        if t.ndim != 1 or t.size < 5:
            raise DomainError("grid must be a 1-D list of at least 5 points")
        if np.any((t < 0) | (t >= 1)) or np.any(np.diff(t) <= 0):
            raise DomainError("grid must be strictly increasing inside [0, 1)")
        u = 1.0 - t
    ratio = _tail_u(m, u) / u ** s
    constant = float(np.max(ratio))
    last = ratio[-5:]
    decreasing = bool(np.all((np.diff(last) < 0) | ((last[1:] == 0) & (last[:-1] == 0))))
    vanishing = decreasing and last[-1] < 0.01 * constant
    if np.all(last > 0):
        slope = float(np.polyfit(np.log(u[-5:]), np.log(last), 1)[0])
    else:
        slope = math.inf
    return CarlesonProfile(
        exponent=float(s),
        constant=constant,
        profile=[(float(a), float(b)) for a, b in zip(t, ratio)],
        vanishing_verdict=bool(vanishing),
        terminal_ratio=float(ratio[-1]),
        terminal_slope=slope,
        bounded_verdict=bool(slope >= -0.01),
    )


def shift_density(m: UnitIntervalMeasure, r: float) -> UnitIntervalMeasure:
    """The measure (1 - t)^r dmu(t)."""
    r = float(r)
    atoms = [(t, w * (1.0 - t) ** r) for t, w in m.atoms]
    pieces = []
    for a, b, c, e in m.pieces:
        if not e + r > -1.0:
            raise DivergentIntegralError(
                f"shifted density exponent {e + r} <= -1: the measure (1-t)^{r} dmu is infinite")
        pieces.append((a, b, c, e + r))
    return UnitIntervalMeasure(atoms, pieces)


def _moment_breakpoints(z, lo, hi):
    cand = (1.0 / z, 8.0 / z, 64.0 / z)
    return [c for c in cand if lo < c < hi]


def log_moment(m: UnitIntervalMeasure, z, lam: float, rel_tol: float = MOMENT_REL_TOL):
    """log mu_lambda[z], evaluated so that very small moments do not underflow."""
    shape = np.shape(z)
    z_arr = np.atleast_1d(np.asarray(z, dtype=float)).ravel()
    lam = float(lam)
    if np.any(z_arr <= 0) or not lam > 0:
        raise DomainError("moment needs z > 0 and lambda > 0")
    parts = []
    for t0, w in m.atoms:
        if t0 == 0.0:
            if np.any(z_arr < 1.0):
                raise DivergentIntegralError("atom at t = 0 with z < 1 gives an infinite moment")
            with np.errstate(divide="ignore"):
                parts.append(np.where(z_arr == 1.0, math.log(w), -np.inf))
            continue
        parts.append(math.log(w) + (lam - 1.0) * math.log1p(-t0) + (z_arr - 1.0) * math.log(t0))
    for a, b, c, r in m.pieces:
        k = r + lam - 1.0
        if not k > -1.0:
            raise DivergentIntegralError(
                f"density exponent {r} with lambda={lam} gives (1-t)^{k}: moment diverges")
        parts.append(math.log(c) + _log_piece_moment(a, b, k, z_arr, rel_tol))
    if not parts:
        out = np.full(z_arr.shape, -np.inf)
    else:
        out = logsumexp(np.vstack(parts), axis=0)
    return float(out[0]) if np.ndim(z) == 0 else out.reshape(shape)


def _flatten_exponent(k):
    """Exponent to declare for the endpoint substitution; smooth powers need none."""
    if k < 0.0 or (k != round(k) and k < 4.0):
        return k
    return 0.0


def _log_piece_moment(a, b, k, z, rel_tol):
    """log int_a^b t^(z-1) (1-t)^k dt, with b^(z-1) factored out."""
    lo_u, hi_u = 1.0 - b, 1.0 - a
    log_b = math.log(b)
    left = _flatten_exponent(k) if lo_u == 0.0 else 0.0
    # only singular t-exponents need flattening; large z is handled by breakpoints
    right = np.where(z < 1.0, z - 1.0, 0.0) if a == 0.0 else np.zeros_like(z)
    bps = [_moment_breakpoints(zz, lo_u, hi_u) for zz in z]

    def f(u, i):
        zz = z[i]
        with np.errstate(divide="ignore"):
            return np.exp((zz - 1.0) * (np.log1p(-u) - log_b) + k * np.log(u))

    res = integrate_many(f, np.full(z.shape, lo_u), np.full(z.shape, hi_u),
                         left, right, rel_tol=rel_tol, breakpoints=bps)
    res.raise_if_failed()
    with np.errstate(divide="ignore"):
        return (z - 1.0) * log_b + np.log(res.values)


def moment(m: UnitIntervalMeasure, z, lam: float, rel_tol: float = MOMENT_REL_TOL):
    """mu_lambda[z] = int_[0,1) t^(z-1) (1 - t)^(lambda-1) dmu(t)."""
    out = np.exp(log_moment(m, z, lam, rel_tol))
    return float(out) if np.ndim(z) == 0 else out


def moment_via_parts(m: UnitIntervalMeasure, z, lam: float, rel_tol: float = MOMENT_REL_TOL):
    """mu_lambda[z] = (z - 1) int_0^1 t^(z-2) nu([t, 1)) dt with nu = (1-t)^(lambda-1) dmu.

    Independent of :func:`moment`: it only uses the exact tail of nu.
    """
    z_arr = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(z_arr <= 1.0):
        raise DomainError("integration by parts needs z > 1")
    nu = shift_density(m, lam - 1.0)
    if nu.is_zero:
        out = np.zeros_like(z_arr)
        return float(out[0]) if np.ndim(z) == 0 else out
    r_end = nu.endpoint_exponent()
    left = _flatten_exponent(r_end + 1.0) if r_end is not None else 0.0
    right = np.where(z_arr < 2.0, z_arr - 2.0, 0.0)
    fixed = nu.breakpoints_u()
    bps = [sorted(set(fixed) | set(_moment_breakpoints(zz, 0.0, 1.0))) for zz in z_arr]
    # the tail vanishes identically near t = 1 if nothing reaches the endpoint
    lo = 0.0 if r_end is not None else 1.0 - max(
        [t for t, _ in nu.atoms] + [b for _, b, _, _ in nu.pieces])
    lo = max(lo, 0.0)
    if lo > 0.0:
        left = 0.0

    def f(u, i):
        zz = z_arr[i]
        with np.errstate(divide="ignore"):
            return np.exp((zz - 2.0) * np.log1p(-u)) * _tail_u(nu, u)

    res = integrate_many(f, np.full(z_arr.shape, lo), np.ones_like(z_arr), left, right,
                         rel_tol=rel_tol, breakpoints=bps)
    res.raise_if_failed()
    out = (z_arr - 1.0) * res.values
    return float(out[0]) if np.ndim(z) == 0 else out


@dataclass(frozen=True)
class MomentDecayProfile:
    """ratio(n) = mu_lambda[x + n] (x + n)^s, with logs kept for underflowing values."""

    n: np.ndarray
    ratio: np.ndarray
    log_ratio: np.ndarray

    def at(self, n: int) -> float:
        i = np.flatnonzero(self.n == n)
        if not i.size:
            raise KeyError(n)
        return float(self.ratio[i[0]])

    def log_at(self, n: int) -> float:
        i = np.flatnonzero(self.n == n)
        if not i.size:
            raise KeyError(n)
        return float(self.log_ratio[i[0]])


def _decay_ns(n_max):
    dense = np.arange(1, min(n_max, 100) + 1)
    if n_max <= 100:
        return dense
    k = np.log10(n_max)
    sparse = np.unique(np.round(np.logspace(2, k, int(math.ceil((k - 2) * 10)) + 1)).astype(int))
    decades = 10 ** np.arange(2, int(math.floor(k)) + 1)
    return np.unique(np.concatenate([dense, sparse, decades, [n_max]]))


def moment_decay_profile(m: UnitIntervalMeasure, lam: float, s: float, x: float,
                         n_max: int) -> MomentDecayProfile:
    """Decay ratios for n = 1..100, then a geometric subsample up to n_max."""
    if not s > 0 or not x > 0:
        raise DomainError("need s > 0 and x > 0")
    if n_max < 10:
        raise DomainError("n_max must be at least 10")
    n = _decay_ns(int(n_max))
    z = x + n
    lr = log_moment(m, z, lam) + s * np.log(z)
    return MomentDecayProfile(n=n, ratio=np.exp(lr), log_ratio=lr)


@dataclass(frozen=True)
class ShiftEquivalenceReport:
    s: float
    r: float
    mu_profile: CarlesonProfile
    nu_profile: CarlesonProfile

    @property
    def mu_constant(self):
        return self.mu_profile.constant

    @property
    def nu_constant(self):
        return self.nu_profile.constant

    @property
    def verdicts_agree(self) -> bool:
        return self.mu_profile.bounded_verdict == self.nu_profile.bounded_verdict


def carleson_shift_equivalence_check(m: UnitIntervalMeasure, s: float, r: float,
                                     grid=None) -> ShiftEquivalenceReport:
    """Compare the s-Carleson profile of mu with the (s+r)-profile of (1-t)^r dmu."""
    if not s > abs(r):
        raise DomainError(f"need s > |r| (s={s}, r={r})")
    nu = shift_density(m, r)
    return ShiftEquivalenceReport(float(s), float(r), carleson_profile(m, s, grid),
                                  carleson_profile(nu, s + r, grid))
