"""Hilbert-type operators from L^p(0, inf) to l^p: norms, thresholds and Carleson measures."""

from ._errors import DivergentIntegralError, DomainError, NonConvergenceError
from .estimators import HilbertTypeOperator, MeasureHilbertOperator
from .extremal import (
    boundary_gamma_blowup,
    build_family,
    divergence_exponent_fit,
    duality_pairing,
    hardy_coefficient_sequence,
    L_epsilon,
    rayleigh_lower_bound,
)
from .measures import (
    UnitIntervalMeasure,
    carleson_profile,
    carleson_shift_equivalence_check,
    moment,
    moment_decay_profile,
    moment_via_parts,
    shift_density,
    tail,
)
from .operators import (
    OperatorParams,
    SequenceWindow,
    TailDescriptor,
    apply_measure_kernel,
    apply_parametric,
    lp_norm_completed,
    p2_matrix_norm,
    schur_weight_w1,
    schur_weight_w2,
    sharp_norm,
)
from .piecewise import PiecewisePowerFunction, PowerPiece
from .quadrature import IntegrandSpec, integrate_half_line, integrate_interval
from .specfun import beta, gamma, geometric_power_sum_ratio, power_zeta_tail, stirling_remainder

__version__ = "0.1.0"
