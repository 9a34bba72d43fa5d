"""Fast option pricing via FFT-composed lattice and grid stencils.

American and European calls on a binomial lattice, American puts on a
log-price finite-difference grid, quadratic-work reference baselines,
and near-linear fast solvers that track the early-exercise boundary
with a divide-and-conquer recursion over FFT-composed linear steps.
"""

from __future__ import annotations

from .american import (
    DEFAULT_BASE_CUTOFF,
    RedRowState,
    TrapezoidProblem,
    fast_american_call,
    solve_trapezoid,
    top_row_state,
)
from .binomial import (
    AmericanCallResult,
    baseline_american_call,
    baseline_european,
    closed_form_european,
    fast_european,
    gaussian_approx_european,
    leaf_row,
)
from .bsm import (
    DEFAULT_BSM_CUTOFF,
    DEFAULT_LAMBDA,
    BsmDiscretization,
    PutResult,
    PutRowState,
    baseline_put_fd,
    bsm_green_value,
    discretize_bsm,
    fast_put_bsm,
    initial_row,
    solve_bsm_trapezoid,
)
from .fft import Kernel, apply_linear_steps, convolve, fft_forward, fft_inverse, kernel_power
from .model import (
    DAYS_PER_YEAR,
    NO_GREEN,
    BinomialParams,
    BoundarySeries,
    DomainError,
    GeometryError,
    GridRow,
    InsufficientWidthError,
    NumericalIntegrityError,
    OptionSpec,
    PricingError,
    StabilityError,
    UnsupportedCombinationError,
    ValidationError,
    derive_binomial_params,
    green_value_binomial,
    validate_spec,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "DAYS_PER_YEAR",
    "NO_GREEN",
    "DEFAULT_BASE_CUTOFF",
    "DEFAULT_BSM_CUTOFF",
    "DEFAULT_LAMBDA",
    "OptionSpec",
    "BinomialParams",
    "GridRow",
    "BoundarySeries",
    "Kernel",
    "RedRowState",
    "TrapezoidProblem",
    "BsmDiscretization",
    "PutRowState",
    "PutResult",
    "AmericanCallResult",
    "PricingError",
    "ValidationError",
    "StabilityError",
    "DomainError",
    "UnsupportedCombinationError",
    "NumericalIntegrityError",
    "InsufficientWidthError",
    "GeometryError",
    "validate_spec",
    "derive_binomial_params",
    "green_value_binomial",
    "fft_forward",
    "fft_inverse",
    "convolve",
    "kernel_power",
    "apply_linear_steps",
    "leaf_row",
    "baseline_european",
    "baseline_american_call",
    "fast_european",
    "gaussian_approx_european",
    "closed_form_european",
    "top_row_state",
    "solve_trapezoid",
    "fast_american_call",
    "discretize_bsm",
    "bsm_green_value",
    "initial_row",
    "baseline_put_fd",
    "solve_bsm_trapezoid",
    "fast_put_bsm",
]
