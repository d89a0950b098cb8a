"""Experiment configuration: JSON loading and validation with line-accurate messages."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Any

from .._errors import DivergentIntegralError, DomainError
from ..measures import UnitIntervalMeasure
from ..operators import admissibility_errors
from ..piecewise import PiecewisePowerFunction, PowerPiece

EXPERIMENTS = {
    "norm-verify": ("Schur weights, extremal lower bounds and the sharp norm at the threshold",
                    ("3", "4")),
    "threshold-scan": ("divergence exponent of the output sums below the threshold", ("5",)),
    "carleson-test": ("moment decay of a Carleson measure and the integration-by-parts identity",
                      ("6",)),
    "vanishing-test": ("moment decay of a vanishing Carleson measure", ("6",)),
    "duality-scan": ("duality pairing and tail surrogate of the measure kernel operator",
                     ("7",)),
    "boundary-gamma": ("blow-up of the boundary operators gamma = -1, gamma >= p-1, gamma < -1",
                       ("8",)),
    "est-check": ("two-sided bound for sum n^(c-1) w^(2n)", ("9",)),
    "stirling-check": ("Gamma/Beta identities and the Stirling remainder bound", ("1", "2")),
    "hilbert-classic": ("truncated Hilbert matrix norms below pi", ("10",)),
    "hardy-question": ("coefficient windows of the Hardy-space map (exploratory)", ("10",)),
}

TOP_KEYS = {"experiment", "params", "measure", "grids", "quadrature", "output", "functions"}
PARAM_KEYS = {"p", "lam", "theta1", "theta2", "alpha", "beta"}
QUAD_KEYS = {"rel_tol"}
OUTPUT_KEYS = {"path", "format"}
# grid key -> (kind, description)
GRID_KEYS = {
    "eps": "number",
    "eps_ladder": "numbers",
    "N": "int",
    "N_ladder": "ints",
    "n_values": "ints",
    "x_values": "numbers",
    "w_grid": "numbers",
    "c_values": "numbers",
    "gamma_values": "numbers",
    "matrix_sizes": "ints",
    "z_values": "numbers",
    "decay_n": "ints",
    "s": "number",
    "r": "number",
    "x": "number",
    "n_max": "int",
    "lower_fraction": "number",
}


class ConfigError(ValueError):
    """Raised with the full list of problems found in a configuration."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


@dataclass
class ExperimentConfig:
    experiment: str
    params: dict = field(default_factory=dict)
    measure: UnitIntervalMeasure | None = None
    grids: dict = field(default_factory=dict)
    rel_tol: float = 1e-9
    output_path: str | None = None
    output_format: str = "json"
    functions: list | None = None
    raw: dict = field(default_factory=dict)

    def echo(self) -> dict:
        return self.raw


class _Locator:
    """Maps key paths to 1-based line numbers in the source text."""

    def __init__(self, text: str):
        self.text = text
        self.starts = [0] + [m.end() for m in re.finditer("\n", text)]

    def line_of(self, offset: int) -> int:
        lo, hi = 0, len(self.starts)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.starts[mid] <= offset:
                lo = mid
            else:
                hi = mid
        return lo + 1

    def find(self, *path) -> int:
        pos = 0
        for key in path:
            if isinstance(key, int):
                continue
            m = re.compile(r'"%s"\s*:' % re.escape(key)).search(self.text, pos)
            if not m:
                break
            pos = m.start()
        return self.line_of(pos)


def _functions_from_literal(items, where, errors, loc):
    out = []
    if not isinstance(items, list) or not items:
        errors.append(f"line {loc.find('functions')}: functions must be a nonempty list")
        return None
    for i, f in enumerate(items):
        try:
            pieces = []
            for pc in f:
                if len(pc) != 4:
                    raise DomainError("each piece is [a, b, c, e]")
                a, b, c, e = pc
                b = math.inf if b is None else b
                pieces.append(PowerPiece(float(a), float(b), float(c), float(e)))
            out.append(PiecewisePowerFunction(pieces))
        except (TypeError, ValueError) as exc:
            errors.append(f"line {loc.find('functions')}: functions[{i}]: {exc}")
    return out


def _check_number(v, kind):
    if kind in ("number", "int"):
        ok = isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)
        return ok and (kind == "number" or float(v) == int(v))
    if not isinstance(v, list) or not v:
        return False
    return all(_check_number(x, kind[:-1]) for x in v)


def validate(config_text: str) -> ExperimentConfig:
    """Parse and check a JSON configuration; raises ConfigError listing every problem."""
    try:
        raw = json.loads(config_text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"line {exc.lineno}: invalid JSON: {exc.msg}"]) from None
    loc = _Locator(config_text)
    errors = []
    if not isinstance(raw, dict):
        raise ConfigError(["line 1: configuration must be a JSON object"])
    for k in sorted(set(raw) - TOP_KEYS):
        errors.append(f"line {loc.find(k)}: unknown key '{k}'")
    exp = raw.get("experiment")
    if exp is None:
        errors.append("line 1: missing required key 'experiment'")
    elif exp not in EXPERIMENTS:
        errors.append(f"line {loc.find('experiment')}: unknown experiment '{exp}' "
                      f"(choose from {', '.join(sorted(EXPERIMENTS))})")

    params = raw.get("params", {})
    if not isinstance(params, dict):
        errors.append(f"line {loc.find('params')}: params must be an object")
        params = {}
    for k in sorted(set(params) - PARAM_KEYS):
        errors.append(f"line {loc.find('params', k)}: unknown key 'params.{k}'")
    clean = {}
    for k in PARAM_KEYS & set(params):
        v = params[k]
        if not _check_number(v, "number"):
            errors.append(f"line {loc.find('params', k)}: params.{k} must be a finite number")
        else:
            clean[k] = float(v)
    if exp in ("boundary-gamma",):
        pass  # only p is used; alpha = beta = gamma comes from the grid
    elif "p" in clean or exp not in ("est-check", "stirling-check", "hilbert-classic"):
        p = clean.get("p", 2.0)
        full = {"theta1": 1.0, "theta2": 1.0, "alpha": 0.0, "beta": 0.0, **clean, "p": p}
        lam = full.get("lam", 1.0 + (full["beta"] - full["alpha"]) / p if p > 1 else 1.0)
        for msg in admissibility_errors(p, lam, full["theta1"], full["theta2"],
                                        full["alpha"], full["beta"]):
            key = msg.split()[0]
            errors.append(f"line {loc.find('params', key) if key in params else loc.find('params')}"
                          f": {msg}")
    if exp == "boundary-gamma" and "p" in clean and not clean["p"] > 1:
        errors.append(f"line {loc.find('params', 'p')}: p must exceed 1 (got {clean['p']})")

    measure = None
    if "measure" in raw:
        try:
            measure = UnitIntervalMeasure.from_literal(raw["measure"])
        except (DomainError, DivergentIntegralError, TypeError, ValueError) as exc:
            errors.append(f"line {loc.find('measure')}: invalid measure: {exc}")

    grids = raw.get("grids", {})
    if not isinstance(grids, dict):
        errors.append(f"line {loc.find('grids')}: grids must be an object")
        grids = {}
    for k, v in grids.items():
        if k not in GRID_KEYS:
            errors.append(f"line {loc.find('grids', k)}: unknown key 'grids.{k}'")
        elif not _check_number(v, GRID_KEYS[k]):
            kind = GRID_KEYS[k]
            want = {"number": "a number", "int": "an integer", "numbers": "a list of numbers",
                    "ints": "a list of integers"}[kind]
            errors.append(f"line {loc.find('grids', k)}: grids.{k} must be {want}")

    rel_tol = 1e-9
    quad = raw.get("quadrature", {})
    if not isinstance(quad, dict):
        errors.append(f"line {loc.find('quadrature')}: quadrature must be an object")
        quad = {}
    for k in sorted(set(quad) - QUAD_KEYS):
        errors.append(f"line {loc.find('quadrature', k)}: unknown key 'quadrature.{k}'")
    if "rel_tol" in quad:
        v = quad["rel_tol"]
        if not _check_number(v, "number") or not 1e-13 <= v <= 1e-3:
            errors.append(f"line {loc.find('quadrature', 'rel_tol')}: "
                          "quadrature.rel_tol must lie in [1e-13, 1e-3]")
        else:
            rel_tol = float(v)

    out = raw.get("output", {})
    if not isinstance(out, dict):
        errors.append(f"line {loc.find('output')}: output must be an object")
        out = {}
    for k in sorted(set(out) - OUTPUT_KEYS):
        errors.append(f"line {loc.find('output', k)}: unknown key 'output.{k}'")
    fmt = out.get("format", "json")
    if fmt not in ("json", "csv"):
        errors.append(f"line {loc.find('output', 'format')}: output.format must be json or csv")
    path = out.get("path")
    if path is not None and not isinstance(path, str):
        errors.append(f"line {loc.find('output', 'path')}: output.path must be a string")

    functions = None
    if "functions" in raw:
        functions = _functions_from_literal(raw["functions"], "functions", errors, loc)

    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(exp, clean, measure, dict(grids), rel_tol, path, fmt, functions, raw)


def load(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return validate(fh.read())
