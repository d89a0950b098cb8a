"""Acceptance criteria 1-10.

Each test evaluates every sub-check of its criterion, records one
PASS/FAIL line (printed in the terminal summary and to stdout), then
asserts. Tolerances and runtime budgets are pinned as module constants.
"""

import math
import time

import numpy as np
import pytest

import oracles
from conftest import ACCEPTANCE_LINES
from hilbertops import (
    OperatorParams,
    PiecewisePowerFunction,
    UnitIntervalMeasure,
    beta,
    boundary_gamma_blowup,
    build_family,
    carleson_profile,
    divergence_exponent_fit,
    duality_pairing,
    gamma,
    geometric_power_sum_ratio,
    hardy_coefficient_sequence,
    moment,
    moment_decay_profile,
    moment_via_parts,
    p2_matrix_norm,
    rayleigh_lower_bound,
    schur_weight_w1,
    schur_weight_w2,
    sharp_norm,
    stirling_remainder,
)
from hilbertops.extremal import DEFAULT_EPS_LADDER, output_norm, threshold_partial_sums
from hilbertops.experiments.runner import default_test_functions

# criterion 1
BETA_GAMMA_RTOL = 1e-10
REFLECTION_RTOL = 1e-10
BETA_GRID = (0.1, 0.3, 0.7, 1.0, 2.5, 5.0)
REFLECTION_CASES = [(p, a) for p in (2, 3, 4) for a in (-0.5, 0.0, 1.0)]
# criterion 2
STIRLING_X = (0.5, 1, 2, 5, 10, 100)
# criterion 3
W1_RTOL = 1e-6
W2_SLACK = 1e-6
W1_N = (1, 10, 100)
W2_X = (0.1, 1, 100)
SCHUR_SETS = [
    dict(p=2, theta1=1, theta2=1, alpha=0, beta=0),
    dict(p=3, theta1=0.8, theta2=1, alpha=0.5, beta=-0.5),
    dict(p=2, theta1=1, theta2=0.5, alpha=0, beta=0),
    dict(p=4, theta1=1, theta2=1, alpha=-0.5, beta=1),
    dict(p=1.5, theta1=0.7, theta2=0.9, alpha=0.2, beta=0.1),
]
# criterion 4
EPS_LADDER = (0.5, 0.2, 0.1, 0.05)
LOWER_FRACTION_P2 = 0.95
LOWER_FRACTION_GENERAL = 0.92
UPPER_SLACK_LOWER = 1e-3
UPPER_SLACK_INPUTS = 1e-4
GENERAL_SET = dict(p=3, theta1=0.8, theta2=1, alpha=0.5, beta=-0.5)
# criterion 5
SUB_THRESHOLD_LAM = 0.75
THRESHOLD_EPS = 0.1
PREDICTED_DELTA = 0.4
DELTA_RTOL = 0.10
N_LADDER = (1000, 2000, 5000, 10_000, 20_000, 50_000, 100_000)
# criterion 6
DECAY_EXACT_TOL = 1e-8
DECAY_MARKS = (100, 1000, 10_000)
DECAY_DROP = 0.05
PARTS_RTOL = 1e-8
PARTS_Z = (2, 3.5, 10, 100)
# criterion 7
W_GRID = tuple(1 - 2.0 ** -k for k in range(1, 11))
BOUNDED_GROWTH = 10.0
DEFICIENT_GROWTH = 10.0
# criterion 8
BLOWUP_GROWTH = 10.0
# criterion 9
EST_C = (0.5, 1.0, 2.0)
EST_W = (0.5, 0.9, 0.99, 0.999)
EST_BRACKET = (0.2, 5.0)
EST_EXACT_TOL = 1e-12
# criterion 10
MATRIX_SIZES = (256, 1024, 4096)
HARDY_N = 1000

BUDGET = {"1": 1, "2": 1, "3": 10, "4": 120, "5": 60, "6": 30, "7": 30, "8": 60, "9": 1,
          "10": 120}


def _record(cid, checks, elapsed):
    """checks: list of (name, passed, detail). Adds the runtime budget check."""
    checks = list(checks) + [(f"runtime < {BUDGET[cid]} s", elapsed < BUDGET[cid],
                              f"{elapsed:.2f} s")]
    failed = [c for c in checks if not c[1]]
    if failed:
        body = "; ".join(f"{n} [{d}]" for n, _, d in failed)
        line = f"FAIL criterion {cid}: {body}"
    else:
        body = "; ".join(f"{n} [{d}]" for n, _, d in checks)
        line = f"PASS criterion {cid}: {body}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert not failed, line


def test_criterion_1_special_function_identities():
    t0 = time.perf_counter()
    worst = max(abs(beta(u, v) * gamma(u + v) / (gamma(u) * gamma(v)) - 1)
                for u in BETA_GRID for v in BETA_GRID)
    # independent check of the Gamma values themselves
    worst_g = max(abs(gamma(x) / float(oracles.gamma_integral(x)) - 1) for x in BETA_GRID)
    refl = 0.0
    for p, a in REFLECTION_CASES:
        if not -1 < a < p - 1:
            continue  # (p=2, alpha=1) is outside the admissible range
        refl = max(refl, abs(beta((1 + a) / p, (p - 1 - a) / p)
                             / (math.pi / math.sin(math.pi * (1 + a) / p)) - 1))
    _record("1", [
        ("B = Gamma ratio on 6x6 grid", worst <= BETA_GAMMA_RTOL, f"worst rel {worst:.1e}"),
        ("Gamma vs integral definition", worst_g <= BETA_GAMMA_RTOL, f"worst rel {worst_g:.1e}"),
        ("B = pi/sin reflection", refl <= REFLECTION_RTOL, f"worst rel {refl:.1e}"),
    ], time.perf_counter() - t0)


def test_criterion_2_stirling_bound():
    t0 = time.perf_counter()
    rows = [(x, *stirling_remainder(x)) for x in STIRLING_X]
    within = all(abs(r) <= math.exp(1 / (12 * x)) - 1 for x, r, _ in rows)
    bound_ok = all(b == pytest.approx(math.exp(1 / (12 * x)) - 1, rel=1e-14) for x, _, b in rows)
    oracle_err = max(abs(r - oracles.stirling_remainder(x)) for x, r, _ in rows)
    _record("2", [
        ("|r(x)| <= exp(1/(12x)) - 1", within and bound_ok,
         ", ".join(f"x={x}: {r:.3e}" for x, r, _ in rows)),
        ("remainder vs mpmath", oracle_err <= 1e-12, f"worst abs {oracle_err:.1e}"),
    ], time.perf_counter() - t0)


def test_criterion_3_schur_weights():
    t0 = time.perf_counter()
    w1_err = 0.0
    w2_ratio = 0.0
    w2_oracle = 0.0
    for kw in SCHUR_SETS:
        pr = OperatorParams.critical(**kw)
        b = beta((1 + pr.beta) / pr.p, (pr.p - 1 - pr.alpha) / pr.p)
        w1 = schur_weight_w1(pr, np.array(W1_N, dtype=float))
        w1_err = max(w1_err, float(np.max(np.abs(w1 / (b / pr.theta1) - 1))))
        for x in W2_X:
            v = schur_weight_w2(pr, x)
            w2_ratio = max(w2_ratio, v / (b / pr.theta2))
            if kw["p"] == 2 and kw["theta2"] == 1:
                ref = oracles.w2_reference(pr.p, pr.theta1, pr.theta2, pr.alpha, pr.beta, x)
                w2_oracle = max(w2_oracle, abs(v / ref - 1))
    pi_w1 = float(schur_weight_w1(OperatorParams.critical(2), 10.0))
    _record("3", [
        ("w1(n) = B/theta1 over 5 sets", w1_err <= W1_RTOL, f"worst rel {w1_err:.1e}"),
        ("(p=2) w1 = pi", abs(pi_w1 / math.pi - 1) <= W1_RTOL, f"{pi_w1:.10f}"),
        ("w2(x) <= B/theta2 (1+1e-6)", w2_ratio <= 1 + W2_SLACK, f"max ratio {w2_ratio:.6f}"),
        ("w2 vs brute-sum oracle", w2_oracle <= 1e-6, f"worst rel {w2_oracle:.1e}"),
    ], time.perf_counter() - t0)


def _bracket(pr, fraction):
    sharp = sharp_norm(pr)
    vals = [rayleigh_lower_bound(pr, e).value for e in EPS_LADDER]
    ups = [output_norm(pr, f) / (sharp * f.norm(pr.p)) for f in default_test_functions(pr)]
    tag = f"p={pr.p:g}"
    return [
        (f"{tag} lower bound at eps=0.05 >= {fraction} sharp", vals[-1] >= fraction * sharp,
         f"ratio {vals[-1] / sharp:.4f}"),
        (f"{tag} lower bounds <= sharp (1+1e-3)",
         max(vals) <= sharp * (1 + UPPER_SLACK_LOWER), f"max ratio {max(vals) / sharp:.4f}"),
        (f"{tag} lower bounds increasing", all(b > a for a, b in zip(vals, vals[1:])),
         " < ".join(f"{v / sharp:.4f}" for v in vals)),
        (f"{tag} ||Tf|| <= sharp ||f|| (1+1e-4), 5 inputs",
         max(ups) <= 1 + UPPER_SLACK_INPUTS, f"max ratio {max(ups):.4f}"),
    ]


def test_criterion_4_sharp_norm_bracket():
    t0 = time.perf_counter()
    assert EPS_LADDER == DEFAULT_EPS_LADDER
    checks = _bracket(OperatorParams.critical(2), LOWER_FRACTION_P2)
    checks += _bracket(OperatorParams.critical(**GENERAL_SET), LOWER_FRACTION_GENERAL)
    _record("4", checks, time.perf_counter() - t0)


def test_criterion_5_threshold():
    t0 = time.perf_counter()
    pr = OperatorParams(2, SUB_THRESHOLD_LAM)
    fit = divergence_exponent_fit(pr, THRESHOLD_EPS, N_LADDER)
    rel = abs(fit.fitted_delta - PREDICTED_DELTA) / PREDICTED_DELTA
    crit = OperatorParams.critical(2)
    S = threshold_partial_sums(crit, THRESHOLD_EPS, N_LADDER)
    fam = build_family("f_tilde", 2, eps=THRESHOLD_EPS)
    bound = (sharp_norm(crit) * fam.exact_norm) ** 2
    _record("5", [
        ("predicted delta = 0.4", fit.predicted_delta == pytest.approx(PREDICTED_DELTA),
         f"{fit.predicted_delta:g}"),
        ("fitted delta within 10%", rel <= DELTA_RTOL,
         f"fitted {fit.fitted_delta:.4f}, rel {rel:.3f}"),
        ("N <= 1e5", max(N_LADDER) <= 100_000, f"max N {max(N_LADDER)}"),
        ("threshold partial sums <= (sharp ||f||)^2", bool(np.all(S <= bound)),
         f"max {S.max():.3f} vs {bound:.3f}"),
    ], time.perf_counter() - t0)


def test_criterion_6_moment_decay():
    t0 = time.perf_counter()
    leb = UnitIntervalMeasure.lebesgue()
    d = moment_decay_profile(leb, 1.0, 1.0, 0.5, 10_000)
    exact_err = float(np.max(np.abs(d.ratio - 1)))
    checks = [("Lebesgue decay ratio == 1", exact_err <= DECAY_EXACT_TOL,
               f"max dev {exact_err:.1e}")]
    for name, m, x in (("density (1-t)", UnitIntervalMeasure.power_density(1.0), 0.5),
                       ("atom at 0.5", UnitIntervalMeasure.atom(0.5, 1.0), 1.0)):
        d = moment_decay_profile(m, 1.0, 1.0, x, max(DECAY_MARKS))
        logs = [d.log_at(n) for n in DECAY_MARKS]
        drop = math.exp(logs[-1] - logs[0])
        checks.append((f"{name}: strictly decreasing at 1e2, 1e3, 1e4",
                       all(b < a for a, b in zip(logs, logs[1:])),
                       ", ".join(f"{v:.3g}" for v in logs) + " (log)"))
        checks.append((f"{name}: final < 0.05 x initial", drop < DECAY_DROP, f"{drop:.3g}"))
        checks.append((f"{name}: vanishing verdict", carleson_profile(m, 1.0).vanishing_verdict,
                       ""))
    z = np.array(PARTS_Z, dtype=float)
    worst = 0.0
    for m in (leb, UnitIntervalMeasure.power_density(1.0),
              UnitIntervalMeasure.power_density(-0.5, 0.5)):
        for lam in (1.0, 1.5):
            worst = max(worst, float(np.max(np.abs(moment(m, z, lam)
                                                   / moment_via_parts(m, z, lam) - 1))))
    leb_exact = float(np.max(np.abs(moment(leb, z, 1.0) * z - 1)))
    checks.append(("moment = moment_via_parts", worst <= PARTS_RTOL, f"worst rel {worst:.1e}"))
    checks.append(("Lebesgue moment = 1/z", leb_exact <= PARTS_RTOL, f"worst rel {leb_exact:.1e}"))
    _record("6", checks, time.perf_counter() - t0)


def test_criterion_7_carleson_duality():
    t0 = time.perf_counter()
    pr = OperatorParams(2, 1.0)
    assert pr.threshold == 1.0
    critical = UnitIntervalMeasure.lebesgue()  # tail (1-t)^1
    deficient = UnitIntervalMeasure.power_density(-0.5, 0.5)  # tail (1-t)^0.5
    s_crit = [duality_pairing(pr, critical, w).surrogate for w in W_GRID]
    s_def = [duality_pairing(pr, deficient, w).surrogate for w in W_GRID]
    ref = oracles.duality_pairing_reference(0.9, 1.0)
    got = duality_pairing(pr, critical, 0.9).pairing
    _record("7", [
        ("exact tail exponent: surrogate bounded", max(s_crit) <= BOUNDED_GROWTH * s_crit[0],
         f"max/first {max(s_crit) / s_crit[0]:.3f}"),
        ("deficient tail exponent: surrogate > 10x by w=1-2^-10",
         s_def[-1] > DEFICIENT_GROWTH * s_def[0], f"last/first {s_def[-1] / s_def[0]:.2f}"),
        ("pairing vs quadrature oracle at w=0.9", abs(got / ref - 1) <= 1e-8,
         f"{got:.10f} vs {ref:.10f}"),
    ], time.perf_counter() - t0)


def test_criterion_8_boundary_cases():
    t0 = time.perf_counter()
    checks = []
    for gm in (-1.0, 1.0):
        b = boundary_gamma_blowup(2.0, gm)
        vals = ", ".join(f"{v:.4g}" for _, v in b.values)
        checks.append((f"gamma={gm:g}: ladder strictly increasing, last/first > 10",
                       b.strictly_increasing and b.growth > BLOWUP_GROWTH,
                       f"values {vals}; verdict {b.verdict}"))
    b = boundary_gamma_blowup(2.0, -1.5)
    checks.append(("gamma=-1.5: immediate divergent verdict",
                   b.verdict == "divergent" and not b.values, b.verdict))
    _record("8", checks, time.perf_counter() - t0)


def test_criterion_9_geometric_sum_estimate():
    t0 = time.perf_counter()
    r = {(c, w): geometric_power_sum_ratio(c, w) for c in EST_C for w in EST_W}
    lo, hi = EST_BRACKET
    exact = max(abs(r[c, w] - w * w) for c in (1.0, 2.0) for w in EST_W)
    _record("9", [
        ("ratios in [0.2, 5]", all(lo <= v <= hi for v in r.values()),
         f"range [{min(r.values()):.3f}, {max(r.values()):.3f}]"),
        ("c in {1, 2} equals w^2", exact <= EST_EXACT_TOL, f"worst abs {exact:.1e}"),
    ], time.perf_counter() - t0)


def test_criterion_10_classical_consistency():
    t0 = time.perf_counter()
    norms = [p2_matrix_norm("hilbert", N) for N in MATRIX_SIZES]
    small = p2_matrix_norm("hilbert", 2)
    fs = [PiecewisePowerFunction.indicator(0.0, 1.0),
          build_family("f_tilde", 2.0, eps=0.5).realized,
          PiecewisePowerFunction.power(0.0, 2.0, 1.0, -0.3)]
    windows = []
    for f in fs:
        c = hardy_coefficient_sequence(f, HARDY_N)
        windows.append((float(np.sqrt(np.sum(c.values ** 2))), math.pi * f.norm(2.0)))
    _record("10", [
        ("Hilbert norms increasing and < pi",
         all(b > a for a, b in zip(norms, norms[1:])) and all(v < math.pi for v in norms),
         ", ".join(f"N={N}: {v:.4f}" for N, v in zip(MATRIX_SIZES, norms))),
        ("2x2 norm vs closed form", abs(small - oracles.hilbert_2x2()) <= 1e-12, f"{small:.10f}"),
        ("Hardy windows <= pi ||f||_2, 3 inputs", all(a <= b for a, b in windows),
         ", ".join(f"{a:.3f} <= {b:.3f}" for a, b in windows)),
    ], time.perf_counter() - t0)
