"""Shared helpers for the fftlattice test suite.

Randomized tests draw option specs from the documented verification
ranges (spot and strike 50-200, rates and yields 1%-10%, volatility
10%-50%, expiry 30-730 days) so any failure is reproducible from the
seed alone.  Oracle-equivalence draws additionally reject specs whose
standardized log-moneyness puts the option value so far out of the
money that relative-error comparisons degenerate.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from fftlattice import OptionSpec

#: Standardized log-moneyness band used by relative-error suites.  With
#: values outside roughly six standard deviations the option price
#: underflows toward zero and relative error stops being informative;
#: three keeps every sampled price comfortably representable.
MONEYNESS_BAND = 3.0


def draw_spec(
    rng: np.random.Generator,
    steps: int,
    *,
    moneyness_band: float | None = MONEYNESS_BAND,
) -> OptionSpec:
    """Draw one random spec from the documented verification ranges."""
    while True:
        spot = float(rng.uniform(50.0, 200.0))
        strike = float(rng.uniform(50.0, 200.0))
        rate = float(rng.uniform(0.01, 0.1))
        dividend_yield = float(rng.uniform(0.01, 0.1))
        vol = float(rng.uniform(0.1, 0.5))
        days = int(rng.integers(30, 731))
        if moneyness_band is not None:
            years = days / 365.0
            drift = (rate - dividend_yield - 0.5 * vol * vol) * years
            score = (math.log(spot / strike) + drift) / (
                vol * math.sqrt(years)
            )
            if not -moneyness_band <= score <= moneyness_band:
                continue
        return OptionSpec(
            spot=spot,
            strike=strike,
            rate=rate,
            dividend_yield=dividend_yield,
            volatility=vol,
            days_to_expiry=days,
            steps=steps,
        )


def rel_err(value: float, reference: float) -> float:
    """Relative error of *value* against a nonzero *reference*."""
    return abs(value - reference) / abs(reference)


#: Verdict lines registered by the acceptance tests; echoed after the
#: run so they stay visible under pytest's output capture.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance summary")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng() -> np.random.Generator:
    """Fresh deterministic generator for a single test."""
    return np.random.default_rng(20260814)
