"""Lattice pricers: quadratic baselines and the fast European family."""

from __future__ import annotations

import math

import numpy as np
import pytest

from fftlattice import (
    NO_GREEN,
    DomainError,
    OptionSpec,
    baseline_american_call,
    baseline_european,
    closed_form_european,
    derive_binomial_params,
    fast_european,
    gaussian_approx_european,
    leaf_row,
    top_row_state,
)

from conftest import draw_spec, rel_err

# Hand-checkable lattice: one 365-day step, volatility ln 2 (up factor
# exactly 2), no rates.  The two leaves pay 0 and 100; the root value is
# the probability-1/3 upper leaf discounted at rate zero.
DOUBLING_SPEC = OptionSpec(
    spot=100.0,
    strike=100.0,
    rate=0.0,
    dividend_yield=0.0,
    volatility=math.log(2.0),
    days_to_expiry=365,
    steps=1,
)

# Frozen reference prices, each computed once with the quadratic
# baseline and pasted as a literal; they pin the numeric behavior of
# the whole lattice stack against regressions.
EURO_REFERENCE_SPEC = OptionSpec(100.0, 100.0, 0.05, 0.0, 0.2, 365, 1024)
EURO_REFERENCE_PRICE = 10.448630960582836

AMERICAN_REFERENCE_SPEC = OptionSpec(100.0, 90.0, 0.03, 0.07, 0.25, 365, 512)
AMERICAN_REFERENCE_PRICE = 13.221948275290686
AMERICAN_REFERENCE_LEAF_FIRST_EXERCISE_COL = 252


# ---------------------------------------------------------------------------
# leaf_row


def test_leaf_payoffs_on_doubling_lattice():
    row = leaf_row(DOUBLING_SPEC)
    assert row.time_index == 1
    assert row.col_offset == 0
    assert np.allclose(row.values, [0.0, 100.0])


def test_at_the_money_leaf_is_zero():
    spec = OptionSpec(100.0, 100.0, 0.05, 0.03, 0.2, 365, 2)
    row = leaf_row(spec)
    assert row.values[1] == 0.0  # middle node sits exactly at the spot
    assert len(row) == 3


def test_zero_strike_leaves_equal_underlying_levels():
    spec = OptionSpec(100.0, 0.0, 0.05, 0.03, 0.2, 365, 16)
    p = derive_binomial_params(spec)
    row = leaf_row(spec, p)
    j = np.arange(17)
    expected = 100.0 * np.exp((2 * j - 16) * p.log_up)
    assert np.allclose(row.values, expected, rtol=1e-14)


def test_leaf_payoffs_never_negative(rng):
    spec = draw_spec(rng, 64, moneyness_band=None)
    assert leaf_row(spec).values.min() >= 0.0


# ---------------------------------------------------------------------------
# baseline_european


def test_single_step_price_is_one_third_of_upper_leaf():
    assert baseline_european(DOUBLING_SPEC) == pytest.approx(
        100.0 / 3.0, rel=1e-14
    )


def test_zero_strike_reduces_to_discounted_forward(rng):
    # With no strike the payoff is linear, so the lattice price collapses
    # to the dividend-discounted spot. The identity is algebraic:
    # sum of composed weights times leaf levels telescopes.
    for _ in range(5):
        spec = draw_spec(rng, 1000, moneyness_band=None)
        spec = OptionSpec(
            spec.spot, 0.0, spec.rate, spec.dividend_yield,
            spec.volatility, spec.days_to_expiry, spec.steps,
        )
        identity = spec.spot * math.exp(-spec.dividend_yield * spec.years)
        assert rel_err(baseline_european(spec), identity) <= 1e-9
        assert rel_err(fast_european(spec), identity) <= 1e-9


def test_frozen_european_reference_price():
    assert baseline_european(EURO_REFERENCE_SPEC) == pytest.approx(
        EURO_REFERENCE_PRICE, rel=1e-12
    )


# ---------------------------------------------------------------------------
# fast_european


def test_fast_single_step_equals_baseline_exactly():
    assert fast_european(DOUBLING_SPEC) == pytest.approx(
        baseline_european(DOUBLING_SPEC), rel=1e-15
    )


def test_fast_matches_baseline_on_random_specs(rng):
    for steps in (64, 1024, 2**14):
        for _ in range(3):
            spec = draw_spec(rng, steps)
            assert rel_err(fast_european(spec), baseline_european(spec)) <= 1e-8


def test_fast_matches_frozen_reference():
    assert fast_european(EURO_REFERENCE_SPEC) == pytest.approx(
        EURO_REFERENCE_PRICE, rel=1e-10
    )


# ---------------------------------------------------------------------------
# baseline_american_call


def test_american_equals_european_without_dividends(rng):
    # A call on a non-paying stock is never exercised early, so both
    # solvers must agree to round-off.
    for _ in range(5):
        spec = draw_spec(rng, 256)
        spec = OptionSpec(
            spec.spot, spec.strike, spec.rate, 0.0,
            spec.volatility, spec.days_to_expiry, spec.steps,
        )
        euro = baseline_european(spec)
        amer = baseline_american_call(spec).price
        assert rel_err(amer, euro) <= 1e-12


def test_single_step_american_price():
    res = baseline_american_call(DOUBLING_SPEC)
    assert res.price == pytest.approx(100.0 / 3.0, rel=1e-14)


def test_frozen_american_reference_price_and_leaf_boundary():
    res = baseline_american_call(AMERICAN_REFERENCE_SPEC)
    assert res.price == pytest.approx(AMERICAN_REFERENCE_PRICE, rel=1e-12)
    # Baseline records the first exercise column of every row 0..T.
    assert len(res.boundaries) == AMERICAN_REFERENCE_SPEC.steps + 1
    assert (
        res.boundaries.at(AMERICAN_REFERENCE_SPEC.steps)
        == AMERICAN_REFERENCE_LEAF_FIRST_EXERCISE_COL
    )


def test_american_dominates_european(rng):
    for _ in range(10):
        spec = draw_spec(rng, 128)
        assert (
            baseline_american_call(spec).price
            >= baseline_european(spec) - 1e-12
        )


def test_full_grid_row_shapes():
    spec = OptionSpec(100.0, 95.0, 0.04, 0.06, 0.3, 180, 32)
    res = baseline_american_call(spec, keep_grid=True)
    assert res.rows is not None and res.exercise_masks is not None
    assert len(res.rows) == 33
    for i, row in enumerate(res.rows):
        assert row.shape == (i + 1,)
        assert res.exercise_masks[i].shape == (i + 1,)


# ---------------------------------------------------------------------------
# gaussian_approx_european


FIXED_CONVERGENCE_SPEC = dict(
    spot=100.0, strike=100.0, rate=0.05, dividend_yield=0.0,
    volatility=0.2, days_to_expiry=365,
)


def gaussian_error(steps: int) -> float:
    spec = OptionSpec(steps=steps, **FIXED_CONVERGENCE_SPEC)
    return rel_err(gaussian_approx_european(spec), baseline_european(spec))


def test_gaussian_error_shrinks_with_resolution():
    errs = [gaussian_error(t) for t in (2**10, 2**12, 2**14)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-5


def test_gaussian_zero_strike_approaches_discounted_forward():
    spec = OptionSpec(100.0, 0.0, 0.05, 0.04, 0.2, 365, 2**14)
    identity = 100.0 * math.exp(-0.04)
    assert rel_err(gaussian_approx_european(spec), identity) <= 5e-8


def test_gaussian_deep_out_of_the_money_is_zero():
    spec = OptionSpec(50.0, 2e5, 0.05, 0.03, 0.1, 30, 256)
    assert gaussian_approx_european(spec) == 0.0


def test_gaussian_degenerate_window_rejected():
    # One step with the up probability pushed to 0.99 leaves no integer
    # inside the six-sigma window.
    spec = OptionSpec(100.0, 100.0, 0.09817, 0.0, 0.1, 365, 1)
    with pytest.raises(DomainError):
        gaussian_approx_european(spec)


# ---------------------------------------------------------------------------
# closed_form_european


def test_closed_form_accuracy_at_high_resolution():
    # Measured once against the quadratic baseline at T = 2^16
    # (relative error 2.85e-6) and frozen with a 3.5x margin.
    spec = OptionSpec(steps=2**16, **FIXED_CONVERGENCE_SPEC)
    assert rel_err(closed_form_european(spec), baseline_european(spec)) <= 1e-5


def test_closed_form_approaches_gaussian_sum():
    gaps = []
    for steps in (2**10, 2**12, 2**14):
        spec = OptionSpec(steps=steps, **FIXED_CONVERGENCE_SPEC)
        gaps.append(
            abs(closed_form_european(spec) - gaussian_approx_european(spec))
        )
    assert gaps[0] > gaps[1] > gaps[2]


def test_closed_form_rejects_zero_strike():
    spec = OptionSpec(100.0, 0.0, 0.05, 0.03, 0.2, 365, 1024)
    with pytest.raises(DomainError):
        closed_form_european(spec)


def test_closed_form_deep_out_of_the_money_is_zero():
    spec = OptionSpec(50.0, 2e5, 0.05, 0.03, 0.1, 30, 256)
    assert closed_form_european(spec) == 0.0


# ---------------------------------------------------------------------------
# top_row_state (terminal-row exercise boundary in closed form)


def test_terminal_boundary_at_the_money_is_half():
    for steps in (10, 11, 100, 101):
        spec = OptionSpec(100.0, 100.0, 0.05, 0.03, 0.2, 365, steps)
        assert top_row_state(spec).boundary == steps // 2


def test_terminal_boundary_closed_form_matches_leaf_scan():
    # Up factor pinned to 1.02 so the expected index is checkable by hand:
    # floor((100 + ln 0.9 / ln 1.02) / 2) = 47.
    spec = OptionSpec(
        100.0, 90.0, 0.05, 0.03, 10.0 * math.log(1.02), 365, 100
    )
    state = top_row_state(spec)
    assert state.boundary == 47
    payoffs = leaf_row(spec).values
    first_positive = int(np.argmax(payoffs > 0.0))
    assert state.boundary == first_positive - 1
    assert np.all(state.segment.values == 0.0)
    assert state.segment.last_col == 47


def test_terminal_boundary_scan_agreement_randomized(rng):
    for _ in range(25):
        spec = draw_spec(rng, int(rng.integers(1, 400)), moneyness_band=None)
        state = top_row_state(spec)
        payoffs = leaf_row(spec).values
        positive = np.nonzero(payoffs > 0.0)[0]
        expected = int(positive[0]) - 1 if len(positive) else spec.steps
        assert state.boundary == expected


def test_terminal_boundary_all_exercise_when_strike_is_zero():
    spec = OptionSpec(100.0, 0.0, 0.05, 0.03, 0.2, 365, 64)
    state = top_row_state(spec)
    assert state.boundary == -1
    assert len(state.segment) == 0


def test_terminal_boundary_all_continuation_when_unreachable():
    # Strike above the highest leaf: the payoff is never positive.
    spec = OptionSpec(50.0, 200.0, 0.05, 0.03, 0.1, 30, 64)
    assert top_row_state(spec).boundary == 64
