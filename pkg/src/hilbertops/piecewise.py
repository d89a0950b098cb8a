"""Functions on (0, inf) made of finitely many power pieces c * x^e."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ._errors import DivergentIntegralError, DomainError

__all__ = ["PowerPiece", "PiecewisePowerFunction"]


@dataclass(frozen=True)
class PowerPiece:
    """c * x^e on the interval (a, b]; b may be infinite."""

    a: float
    b: float
    c: float
    e: float

    def __post_init__(self):
        if not (0.0 <= self.a < self.b):
            raise DomainError(f"piece interval must satisfy 0 <= a < b, got ({self.a}, {self.b}]")
        if not self.c >= 0.0 or math.isinf(self.c):
            raise DomainError(f"piece coefficient must be finite and >= 0, got {self.c}")
        if not math.isfinite(self.e):
            raise DomainError("piece exponent must be finite")

    def norm_p(self, p: float) -> float:
        """Exact integral of |c x^e|^p over the piece."""
        if self.c == 0.0:
            return 0.0
        k = p * self.e + 1.0
        cp = self.c ** p
        if math.isinf(self.b) and k >= 0.0:
            raise DivergentIntegralError(
                f"x^{self.e} is not p-integrable at infinity for p={p}")
        if self.a == 0.0 and k <= 0.0:
            raise DivergentIntegralError(f"x^{self.e} is not p-integrable at 0 for p={p}")
        if k == 0.0:
            return cp * math.log(self.b / self.a)
        hi = 0.0 if math.isinf(self.b) else self.b ** k
        lo = 0.0 if self.a == 0.0 else self.a ** k
        return cp * (hi - lo) / k


class PiecewisePowerFunction:
    """Nonnegative function sum of power pieces on (0, inf).

    Piece intervals are either identical or disjoint; pieces that share an
    interval add up (this is how sums of two functions are represented).
    Outside the listed pieces the function is zero.
    """

    def __init__(self, pieces: Iterable[PowerPiece | tuple]):
        ps = [p if isinstance(p, PowerPiece) else PowerPiece(*map(float, p)) for p in pieces]
        ps = [p for p in ps if p.c > 0.0]
        ps.sort(key=lambda p: (p.a, p.b, p.e))
        intervals = sorted({(p.a, p.b) for p in ps})
        for (a0, b0), (a1, b1) in zip(intervals, intervals[1:]):
            if a1 < b0:
                raise DomainError(
                    f"pieces ({a0}, {b0}] and ({a1}, {b1}] overlap without coinciding")
        self.pieces = tuple(ps)

    @classmethod
    def indicator(cls, a: float, b: float, value: float = 1.0):
        return cls([PowerPiece(a, b, value, 0.0)])

    @classmethod
    def power(cls, a: float, b: float, c: float, e: float):
        return cls([PowerPiece(a, b, c, e)])

    def __repr__(self):
        body = ", ".join(f"({p.a:g},{p.b:g}]:{p.c:g}x^{p.e:g}" for p in self.pieces[:4])
        more = f", ... ({len(self.pieces)} pieces)" if len(self.pieces) > 4 else ""
        return f"PiecewisePowerFunction({body}{more})"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for p in self.pieces:
            sel = (x > p.a) & (x <= p.b)
            out[sel] += p.c * x[sel] ** p.e
        return out

    @property
    def breakpoints(self):
        pts = set()
        for p in self.pieces:
            pts.add(p.a)
            if math.isfinite(p.b):
                pts.add(p.b)
        return sorted(pts)

    def _refine(self, cuts):
        out = []
        for p in self.pieces:
            inner = [c for c in cuts if p.a < c < p.b]
            edges = [p.a, *inner, p.b]
            out.extend(PowerPiece(lo, hi, p.c, p.e) for lo, hi in zip(edges, edges[1:]))
        return out

    def __add__(self, other):
        if not isinstance(other, PiecewisePowerFunction):
            return NotImplemented
        cuts = sorted(set(self.breakpoints) | set(other.breakpoints))
        merged = {}
        for p in self._refine(cuts) + other._refine(cuts):
            key = (p.a, p.b, p.e)
            merged[key] = merged.get(key, 0.0) + p.c
        return PiecewisePowerFunction(PowerPiece(a, b, c, e) for (a, b, e), c in merged.items())

    def __mul__(self, k):
        k = float(k)
        if k < 0:
            raise DomainError("only nonnegative multiples are representable")
        return PiecewisePowerFunction(PowerPiece(p.a, p.b, k * p.c, p.e) for p in self.pieces)

    __rmul__ = __mul__

    def norm_p(self, p: float) -> float:
        """||f||_p^p; exact for single-term intervals, quadrature otherwise."""
        groups = {}
        for piece in self.pieces:
            groups.setdefault((piece.a, piece.b), []).append(piece)
        total = 0.0
        for (a, b), members in groups.items():
            if len(members) == 1:
                total += members[0].norm_p(p)
            else:
                total += _multi_term_norm_p(members, a, b, p)
        return total

    def norm(self, p: float) -> float:
        return self.norm_p(p) ** (1.0 / p)


def _multi_term_norm_p(members, a, b, p):
    from .quadrature import integrate_interval

    for m in members:
        m.norm_p(p)  # raises if any single term already diverges
    e_lo = min(m.e for m in members)
    e_hi = max(m.e for m in members)
    f = lambda x: sum(m.c * x ** m.e for m in members) ** p
    left = p * e_lo if a == 0.0 else 0.0
    right = -p * e_hi if math.isinf(b) else 0.0
    return integrate_interval(f, a, b, (left, right), rel_tol=1e-12).value
