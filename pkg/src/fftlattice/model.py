"""Shared domain types: option descriptions, lattice parameters, grid rows.

This module owns the small value objects that every pricing routine consumes:
the option description (:class:`OptionSpec`), the derived lattice step
parameters (:class:`BinomialParams`), a contiguous row of grid values
(:class:`GridRow`), a per-row exercise-boundary record
(:class:`BoundarySeries`), and the package's exception hierarchy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DAYS_PER_YEAR",
    "NO_GREEN",
    "PricingError",
    "ValidationError",
    "StabilityError",
    "DomainError",
    "UnsupportedCombinationError",
    "NumericalIntegrityError",
    "InsufficientWidthError",
    "GeometryError",
    "OptionSpec",
    "BinomialParams",
    "GridRow",
    "BoundarySeries",
    "validate_spec",
    "derive_binomial_params",
    "green_value_binomial",
]

DAYS_PER_YEAR = 365.0

#: Sentinel boundary value for a recorded row that contains no exercise
#: (green) cell at all.
NO_GREEN: int = int(np.iinfo(np.int64).min)


class PricingError(Exception):
    """Base class for every error raised by this package."""

    #: Suggested process exit code when surfaced through the CLI.
    exit_code = 2


class ValidationError(PricingError, ValueError):
    """An option spec (or derived lattice quantity) is out of domain.

    Parameters
    ----------
    field:
        Name of the offending field.
    message:
        Human-readable description; should mention ``field``.
    """

    def __init__(self, field: str, message: str) -> None:
        super().__init__(message)
        self.field = field


class StabilityError(PricingError):
    """An explicit finite-difference weight went negative.

    Carries the name of the violating weight and a remedial suggestion.
    """

    def __init__(self, weight: str, message: str) -> None:
        super().__init__(message)
        self.weight = weight


class DomainError(PricingError, ValueError):
    """Inputs are outside the mathematical domain of a formula."""


class UnsupportedCombinationError(PricingError):
    """A style/right/model/method combination has no implementation."""

    exit_code = 3


class NumericalIntegrityError(PricingError):
    """A numerical self-check failed (e.g. imaginary residue too large)."""


class InsufficientWidthError(PricingError):
    """A row is too narrow for the requested number of stencil steps."""


class GeometryError(PricingError):
    """A trapezoid decomposition does not tile the requested region."""


@dataclass(frozen=True, slots=True)
class OptionSpec:
    """Contract terms plus lattice resolution for a single option.

    Parameters
    ----------
    spot:
        Current underlying price.
    strike:
        Exercise price.  May be zero (degenerate contract) for the
        closed-form-free identities.
    rate:
        Continuously compounded risk-free rate (per year).
    dividend_yield:
        Continuous dividend yield (per year).
    volatility:
        Annualized log-volatility.  Must be positive.
    days_to_expiry:
        Calendar days until expiry.
    steps:
        Number of lattice time steps.

    Examples
    --------
    >>> spec = OptionSpec(spot=100.0, strike=100.0, rate=0.05,
    ...                   dividend_yield=0.0, volatility=0.2,
    ...                   days_to_expiry=365, steps=1024)
    >>> spec.years
    1.0
    """

    spot: float
    strike: float
    rate: float
    dividend_yield: float
    volatility: float
    days_to_expiry: float
    steps: int

    @property
    def years(self) -> float:
        """Time to expiry in years (days / 365)."""
        return self.days_to_expiry / DAYS_PER_YEAR


def validate_spec(spec: OptionSpec) -> None:
    """Check that every field of *spec* is inside the supported domain.

    Raises
    ------
    ValidationError
        Naming the first violated field.  Messages are stable strings used
        by the CLI for its diagnostics.
    """
    checks: list[tuple[str, bool, str]] = [
        ("spot", spec.spot > 0.0 and math.isfinite(spec.spot),
         "spot must be positive and finite"),
        ("strike", spec.strike >= 0.0 and math.isfinite(spec.strike),
         "strike must be nonnegative and finite"),
        ("rate", spec.rate >= 0.0 and math.isfinite(spec.rate),
         "rate must be nonnegative and finite"),
        ("dividend_yield",
         spec.dividend_yield >= 0.0 and math.isfinite(spec.dividend_yield),
         "dividend_yield must be nonnegative and finite"),
        ("volatility",
         spec.volatility > 0.0 and math.isfinite(spec.volatility),
         "volatility must be positive"),
        ("days_to_expiry",
         spec.days_to_expiry > 0.0 and math.isfinite(spec.days_to_expiry),
         "days_to_expiry must be positive"),
        ("steps", int(spec.steps) == spec.steps and spec.steps >= 1,
         "steps must be >= 1"),
    ]
    for field, ok, message in checks:
        if not ok:
            raise ValidationError(field, message)


@dataclass(frozen=True, slots=True)
class BinomialParams:
    """Per-step quantities of the recombining lattice for one spec.

    Attributes
    ----------
    step_years:
        Length of one time step in years.
    up, down:
        Multiplicative moves per step (``down == 1 / up``).
    prob_up:
        Risk-neutral probability of the up move.
    discount:
        One-step discount factor.
    weight_down, weight_up:
        Discounted step weights: ``discount * (1 - prob_up)`` and
        ``discount * prob_up``.  One backward step of the continuation
        value is ``weight_down * v[j] + weight_up * v[j + 1]``.
    log_up:
        ``ln(up)``, cached because exercise values are computed as
        ``spot * exp((2 j - i) * log_up) - strike``.
    """

    step_years: float
    up: float
    down: float
    prob_up: float
    discount: float
    weight_down: float
    weight_up: float
    log_up: float


def derive_binomial_params(spec: OptionSpec) -> BinomialParams:
    """Derive the per-step lattice parameters from an option spec.

    The step length is ``days_to_expiry / (365 * steps)`` years; the up
    move is ``exp(volatility * sqrt(step))``; the risk-neutral up
    probability solves the one-step martingale condition under the
    carry rate ``rate - dividend_yield``.

    Raises
    ------
    ValidationError
        If the derived up-probability falls outside ``(0, 1)`` (the
        lattice would have a negative step weight).
    """
    validate_spec(spec)
    step_years = spec.days_to_expiry / (DAYS_PER_YEAR * spec.steps)
    log_up = spec.volatility * math.sqrt(step_years)
    up = math.exp(log_up)
    down = 1.0 / up
    growth = math.exp((spec.rate - spec.dividend_yield) * step_years)
    prob_up = (growth - down) / (up - down)
    if not 0.0 < prob_up < 1.0:
        raise ValidationError(
            "prob_up",
            "prob_up out of (0, 1): the carry outruns one lattice step; "
            "increase steps or volatility",
        )
    discount = math.exp(-spec.rate * step_years)
    return BinomialParams(
        step_years=step_years,
        up=up,
        down=down,
        prob_up=prob_up,
        discount=discount,
        weight_down=discount * (1.0 - prob_up),
        weight_up=discount * prob_up,
        log_up=log_up,
    )


def green_value_binomial(
    spec: OptionSpec, params: BinomialParams, time_index: int, col: int
) -> float:
    """Immediate-exercise (call) value at lattice node ``(time_index, col)``.

    The node's underlying level is ``spot * up**(2 * col - time_index)``,
    evaluated as a single ``exp`` to keep the dynamic range bounded.
    """
    return (
        spec.spot * math.exp((2 * col - time_index) * params.log_up)
        - spec.strike
    )


@dataclass(frozen=True, slots=True)
class GridRow:
    """A contiguous run of grid values on one row.

    Attributes
    ----------
    time_index:
        Row index (0 = root / earliest time for lattices; 0 = initial
        condition for marching schemes).
    col_offset:
        Column index of ``values[0]``.
    values:
        Float64 values for columns ``col_offset .. col_offset + len - 1``.
    """

    time_index: int
    col_offset: int
    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", arr)
        if arr.ndim != 1:
            raise ValidationError("values", "values must be a 1-D array")

    def __len__(self) -> int:
        return int(self.values.shape[0])

    @property
    def first_col(self) -> int:
        """Column index of the first stored value."""
        return self.col_offset

    @property
    def last_col(self) -> int:
        """Column index of the last stored value."""
        return self.col_offset + len(self) - 1


@dataclass(frozen=True, slots=True)
class BoundarySeries:
    """Exercise-boundary column per recorded row.

    For call lattices the recorded column is the FIRST exercise (green)
    column of the row (``NO_GREEN`` when the whole row is continuation).
    For put grids it is the LAST exercise column.  Producers document
    which rows they record: baselines record every row, fast solvers
    record stage interfaces only.
    """

    times: np.ndarray
    columns: np.ndarray

    def __post_init__(self) -> None:
        t = np.ascontiguousarray(self.times, dtype=np.int64)
        c = np.ascontiguousarray(self.columns, dtype=np.int64)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "columns", c)
        if t.shape != c.shape or t.ndim != 1:
            raise ValidationError(
                "times", "times and columns must be 1-D arrays of equal length"
            )
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            raise ValidationError("times", "times must be strictly increasing")

    def __len__(self) -> int:
        return int(self.times.shape[0])

    def at(self, time_index: int) -> int:
        """Boundary column recorded for ``time_index``.

        Raises
        ------
        KeyError
            If that row was not recorded.
        """
        pos = int(np.searchsorted(self.times, time_index))
        if pos >= len(self) or self.times[pos] != time_index:
            raise KeyError(time_index)
        return int(self.columns[pos])

    def as_dict(self) -> dict[int, int]:
        """Mapping of recorded row index to boundary column."""
        return {int(t): int(c) for t, c in zip(self.times, self.columns)}
