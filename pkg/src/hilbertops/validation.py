"""Input checks shared by the estimator classes and the experiment runner."""

from __future__ import annotations

import math
from numbers import Real

from ._errors import DomainError
from .measures import UnitIntervalMeasure
from .piecewise import PiecewisePowerFunction


def check_real(value, name, low=None, high=None, low_open=True, high_open=True) -> float:
    if isinstance(value, bool) or not isinstance(value, Real) or not math.isfinite(value):
        raise DomainError(f"{name} must be a finite real number, got {value!r}")
    v = float(value)
    if low is not None and (v <= low if low_open else v < low):
        raise DomainError(f"{name} must be {'>' if low_open else '>='} {low:g}, got {v:g}")
    if high is not None and (v >= high if high_open else v > high):
        raise DomainError(f"{name} must be {'<' if high_open else '<='} {high:g}, got {v:g}")
    return v


def check_positive_int(value, name, minimum=1) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise DomainError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def check_functions(X) -> list:
    """Accept one PiecewisePowerFunction or an iterable of them."""
    if isinstance(X, PiecewisePowerFunction):
        return [X]
    try:
        items = list(X)
    except TypeError:
        raise DomainError("X must be a PiecewisePowerFunction or a list of them") from None
    if not items:
        raise DomainError("X is empty")
    for i, f in enumerate(items):
        if not isinstance(f, PiecewisePowerFunction):
            raise DomainError(f"X[{i}] is {type(f).__name__}, expected PiecewisePowerFunction")
    return items


def check_measure(m) -> UnitIntervalMeasure:
    if isinstance(m, UnitIntervalMeasure):
        return m
    if isinstance(m, dict):
        return UnitIntervalMeasure.from_literal(m)
    raise DomainError("measure must be a UnitIntervalMeasure or a measure literal")
