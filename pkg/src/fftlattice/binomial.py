"""Binomial-lattice pricers: exact baselines and closed/fast alternatives.

The baselines (:func:`baseline_european`, :func:`baseline_american_call`)
sweep the full lattice cell by cell and serve as oracles for everything
else.  :func:`fast_european` prices in one FFT-composed step;
:func:`gaussian_approx_european` replaces the composed weights with their
normal-density limit; :func:`closed_form_european` integrates that limit
analytically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _accel
from .fft import Kernel, kernel_power
from .model import (
    NO_GREEN,
    BinomialParams,
    BoundarySeries,
    DomainError,
    GridRow,
    OptionSpec,
    derive_binomial_params,
)

__all__ = [
    "AmericanCallResult",
    "leaf_row",
    "baseline_european",
    "baseline_american_call",
    "fast_european",
    "gaussian_approx_european",
    "closed_form_european",
]


@dataclass(frozen=True, slots=True)
class AmericanCallResult:
    """Price plus exercise-boundary record of an American-call solve.

    ``boundaries`` records the FIRST exercise column per recorded row
    (``NO_GREEN`` when a row has none).  ``rows`` / ``exercise_masks``
    are populated only when the full grid was requested: ``rows[i]`` holds
    the ``i + 1`` values of row ``i`` and ``exercise_masks[i]`` is True
    where the cell is an exercise cell.
    """

    price: float
    boundaries: BoundarySeries
    rows: list[np.ndarray] | None = None
    exercise_masks: list[np.ndarray] | None = None


def _params_or_derive(
    spec: OptionSpec, params: BinomialParams | None
) -> BinomialParams:
    return derive_binomial_params(spec) if params is None else params


def leaf_row(
    spec: OptionSpec, params: BinomialParams | None = None
) -> GridRow:
    """Terminal-row call values ``max(spot * up**(2 j - T) - strike, 0)``.

    Examples
    --------
    A zero strike makes every leaf the forward node value itself.
    """
    p = _params_or_derive(spec, params)
    n = spec.steps
    j = np.arange(n + 1, dtype=np.float64)
    nodes = spec.spot * np.exp((2.0 * j - n) * p.log_up)
    return GridRow(n, 0, np.maximum(nodes - spec.strike, 0.0))


def baseline_european(
    spec: OptionSpec, params: BinomialParams | None = None
) -> float:
    """Reference European call price by full backward induction.

    Cost is Theta(T^2); every fast path is tested against this.
    """
    p = _params_or_derive(spec, params)
    values = leaf_row(spec, p).values.copy()
    return float(
        _accel.european_backward(values, p.weight_down, p.weight_up)
    )


def baseline_american_call(
    spec: OptionSpec,
    params: BinomialParams | None = None,
    *,
    keep_grid: bool = False,
) -> AmericanCallResult:
    """Reference American call price by full projected backward induction.

    Every cell takes ``max(continuation, exercise)`` (ties to
    continuation); the first exercise column of every row is recorded.
    With ``keep_grid=True`` (intended for small ``T``) all row values and
    exercise masks are retained for structural tests.
    """
    p = _params_or_derive(spec, params)
    n = spec.steps
    if keep_grid:
        return _american_grid_numpy(spec, p)
    values = leaf_row(spec, p).values.copy()
    u2 = np.exp(
        (2.0 * np.arange(n + 1, dtype=np.float64) - n) * p.log_up
    )
    first_green = np.empty(n + 1, dtype=np.int64)
    price = float(
        _accel.american_call_backward(
            values,
            u2,
            first_green,
            spec.spot,
            spec.strike,
            p.weight_down,
            p.weight_up,
            p.log_up,
        )
    )
    cols = np.where(first_green == _accel.NONE_SEEN, NO_GREEN, first_green)
    series = BoundarySeries(np.arange(n + 1, dtype=np.int64), cols)
    return AmericanCallResult(price=price, boundaries=series)


def _american_grid_numpy(
    spec: OptionSpec, p: BinomialParams
) -> AmericanCallResult:
    """Grid-retaining baseline used by structural (small-T) tests."""
    n = spec.steps
    rows: list[np.ndarray] = [np.empty(0)] * (n + 1)
    masks: list[np.ndarray] = [np.empty(0, dtype=bool)] * (n + 1)
    cols = np.empty(n + 1, dtype=np.int64)
    v = leaf_row(spec, p).values.copy()
    green = v > 0.0
    rows[n], masks[n] = v.copy(), green.copy()
    cols[n] = int(np.argmax(green)) if green.any() else NO_GREEN
    for i in range(n - 1, -1, -1):
        lin = p.weight_down * v[: i + 1] + p.weight_up * v[1 : i + 2]
        j = np.arange(i + 1, dtype=np.float64)
        grn = spec.spot * np.exp((2.0 * j - i) * p.log_up) - spec.strike
        green = lin < grn
        v = np.where(green, grn, lin)
        rows[i], masks[i] = v.copy(), green.copy()
        cols[i] = int(np.argmax(green)) if green.any() else NO_GREEN
    return AmericanCallResult(
        price=float(v[0]),
        boundaries=BoundarySeries(np.arange(n + 1, dtype=np.int64), cols),
        rows=rows,
        exercise_masks=masks,
    )


def fast_european(
    spec: OptionSpec, params: BinomialParams | None = None
) -> float:
    """European call price with one composed kernel and one inner product.

    The T-step one-row kernel is composed in a single FFT pointwise power
    and dotted with the leaf row.  To keep the dynamic range of both
    factors bounded, the identity is evaluated in a rescaled (gauged) form:
    with ``g = up**2``,

    ``price = sum_r kernel_power([wd, wu], T)[r] * leaf[r]
            = sum_r kernel_power([wd, wu * g], T)[r]
                    * max(spot * up**-T - strike * up**(-2 r), 0)``

    which is exact term by term (the ``up**(2 r)`` factors cancel) while
    every intermediate stays within a few hundred orders of magnitude of
    the price itself.
    """
    p = _params_or_derive(spec, params)
    n = spec.steps
    gauged = Kernel(
        np.array(
            [p.weight_down, p.weight_up * math.exp(2.0 * p.log_up)]
        ),
        0,
    )
    weights = kernel_power(gauged, n).weights
    r = np.arange(n + 1, dtype=np.float64)
    rescaled_leaf = np.maximum(
        spec.spot * math.exp(-n * p.log_up)
        - spec.strike * np.exp(-2.0 * r * p.log_up),
        0.0,
    )
    return float(np.dot(weights, rescaled_leaf))


def _gaussian_window(
    p: BinomialParams, n: int
) -> tuple[np.ndarray, float, float]:
    """Integer window and (mu, sigma) of the composed-weight normal limit.

    The composed T-step weights concentrate around ``prob_up * T`` with
    variance ``prob_up * (1 - prob_up) * T``; the window spans six standard
    deviations around that peak, clipped to ``[0, T - 1]``.
    """
    mu = -p.prob_up * n
    sigma = p.prob_up * (1.0 - p.prob_up) * n
    center = -mu
    lo = max(int(math.ceil(center - 6.0 * math.sqrt(sigma))), 0)
    hi = min(int(math.floor(center + 6.0 * math.sqrt(sigma))), n - 1)
    if lo > hi:
        raise DomainError(
            f"degenerate weight window [{lo}, {hi}] for {n} steps"
        )
    return np.arange(lo, hi + 1, dtype=np.float64), mu, sigma


def gaussian_approx_european(
    spec: OptionSpec, params: BinomialParams | None = None
) -> float:
    """European call price with composed weights replaced by their
    normal-density limit.

    ``price ~= discount^T * sum_x phi(x) * leaf[x]`` where ``phi`` is the
    normal density with the composed weights' mean and variance, summed
    over a six-standard-deviation window.  The error vanishes as ``T``
    grows (central limit regime).
    """
    p = _params_or_derive(spec, params)
    n = spec.steps
    x, mu, sigma = _gaussian_window(p, n)
    density = np.exp(-((x + mu) ** 2) / (2.0 * sigma)) / math.sqrt(
        2.0 * math.pi * sigma
    )
    leaves = np.maximum(
        spec.spot * np.exp((2.0 * x - n) * p.log_up) - spec.strike, 0.0
    )
    return math.exp(-spec.rate * spec.years) * float(
        np.dot(density, leaves)
    )


def closed_form_european(
    spec: OptionSpec, params: BinomialParams | None = None
) -> float:
    """Closed form of the normal-limit price (no summation at all).

    Integrating the normal-density approximation of
    :func:`gaussian_approx_european` against the leaf payoff from the
    first in-the-money leaf index ``x0`` to ``T`` gives a difference of
    error-function terms:

    ``price = discount^T / 2 * [ spot * exp(lu * (2 sigma lu - 2 mu - T))
    * (erf(A(T)) - erf(A(x0))) - strike * (erf(B(T)) - erf(B(x0))) ]``

    with ``lu = ln(up)``, ``B(x) = (x + mu) / sqrt(2 sigma)`` and
    ``A(x) = B(x) - lu * sqrt(2 sigma)``.

    Raises
    ------
    DomainError
        If ``strike == 0`` (the in-the-money threshold is undefined; use
        :func:`fast_european`, which handles it exactly).
    """
    if spec.strike <= 0.0:
        raise DomainError(
            "strike must be positive for the closed form; a zero strike "
            "has no finite in-the-money threshold"
        )
    p = _params_or_derive(spec, params)
    n = spec.steps
    mu = -p.prob_up * n
    sigma = p.prob_up * (1.0 - p.prob_up) * n
    lu = p.log_up
    threshold = 0.5 * n + math.log(spec.strike / spec.spot) / (2.0 * lu)
    x0 = math.ceil(threshold)
    if x0 > n:
        return 0.0
    x0 = max(x0, 0)
    root = math.sqrt(2.0 * sigma)

    def b_term(x: float) -> float:
        return (x + mu) / root

    def a_term(x: float) -> float:
        return b_term(x) - lu * root

    spot_leg = (
        spec.spot
        * math.exp(lu * (2.0 * sigma * lu - 2.0 * mu - n))
        * (math.erf(a_term(n)) - math.erf(a_term(x0)))
    )
    strike_leg = spec.strike * (math.erf(b_term(n)) - math.erf(b_term(x0)))
    return (
        0.5 * math.exp(-spec.rate * spec.years) * (spot_leg - strike_leg)
    )
