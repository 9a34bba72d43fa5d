"""Command-line front end for the pricing library.

Four subcommands:

* ``price``  -- price a single option and print it with ten significant
  digits plus a one-line parameter echo.
* ``verify`` -- run randomized oracle-equivalence and invariant suites
  (each library module's documented invariants) up to a step-count cap,
  printing one pass/fail line per suite.
* ``bench``  -- time pricing methods over a list of step counts and
  emit a CSV of median wall-clock seconds.
* ``batch``  -- price a CSV portfolio row by row, appending ``price``
  and ``status`` columns.

Exit codes are stable: 0 success, 1 verification failure, 2
validation/stability error, 3 unsupported combination, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import math
import statistics
import sys
import time
from dataclasses import dataclass

import numpy as np

from .american import fast_american_call
from .binomial import (
    baseline_american_call,
    baseline_european,
    closed_form_european,
    derive_binomial_params,
    fast_european,
    gaussian_approx_european,
)
from .bsm import (
    DEFAULT_LAMBDA,
    baseline_put_fd,
    bsm_green_value,
    discretize_bsm,
    fast_put_bsm,
)
from .fft import Kernel, apply_linear_steps, fft_forward, fft_inverse, kernel_power
from .fft import convolve as fft_convolve
from .model import (
    NO_GREEN,
    DomainError,
    GridRow,
    OptionSpec,
    PricingError,
    StabilityError,
    UnsupportedCombinationError,
    ValidationError,
)

__all__ = [
    "PricingRequest",
    "BenchRecord",
    "price_request",
    "cmd_price",
    "cmd_verify",
    "cmd_bench",
    "cmd_batch",
    "build_parser",
    "main",
]

_COMBINATIONS: dict[tuple[str, str, str], tuple[str, ...]] = {
    ("european", "call", "binomial"): (
        "fast",
        "baseline",
        "gaussian",
        "closed-form",
    ),
    ("american", "call", "binomial"): ("fast", "baseline"),
    ("american", "put", "bsm"): ("fast", "baseline"),
}


@dataclass(frozen=True)
class PricingRequest:
    """One fully-specified pricing job.

    Only the combinations listed in ``_COMBINATIONS`` are constructible;
    anything else raises :class:`UnsupportedCombinationError`.
    """

    style: str
    right: str
    model: str
    method: str
    spot: float
    strike: float
    rate: float
    dividend_yield: float
    volatility: float
    days_to_expiry: int
    steps: int
    lam: float | None = None

    def __post_init__(self) -> None:
        methods = _COMBINATIONS.get((self.style, self.right, self.model))
        if methods is None or self.method not in methods:
            raise UnsupportedCombinationError(
                "unsupported combination: "
                f"style={self.style} right={self.right} "
                f"model={self.model} method={self.method}"
            )

    def spec(self) -> OptionSpec:
        return OptionSpec(
            spot=self.spot,
            strike=self.strike,
            rate=self.rate,
            dividend_yield=self.dividend_yield,
            volatility=self.volatility,
            days_to_expiry=self.days_to_expiry,
            steps=self.steps,
        )


@dataclass(frozen=True)
class BenchRecord:
    """One benchmark measurement: a method timed at one step count."""

    method: str
    steps: int
    seconds: float
    price: float
    reps: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.seconds) and self.seconds > 0.0):
            raise ValidationError(
                "seconds", f"wall time must be positive, got {self.seconds!r}"
            )
        if not math.isfinite(self.price):
            raise ValidationError(
                "price", f"price must be finite, got {self.price!r}"
            )


def price_request(request: PricingRequest, *, parallel: bool = False) -> float:
    """Dispatch a pricing request to the corresponding solver."""
    spec = request.spec()
    lam = DEFAULT_LAMBDA if request.lam is None else request.lam
    key = (request.style, request.right, request.model, request.method)
    if key[:3] == ("european", "call", "binomial"):
        if request.method == "fast":
            return fast_european(spec)
        if request.method == "baseline":
            return baseline_european(spec)
        if request.method == "gaussian":
            return gaussian_approx_european(spec)
        return closed_form_european(spec)
    if key[:3] == ("american", "call", "binomial"):
        if request.method == "fast":
            return fast_american_call(spec, parallel=parallel).price
        return baseline_american_call(spec).price
    if request.method == "fast":
        return fast_put_bsm(spec, lam, parallel=parallel).price
    return baseline_put_fd(spec, lam).price


# ---------------------------------------------------------------------------
# price


def cmd_price(args: argparse.Namespace) -> int:
    request = PricingRequest(
        style=args.style,
        right=args.right,
        model=args.model,
        method=args.method,
        spot=args.spot,
        strike=args.strike,
        rate=args.rate,
        dividend_yield=args.dividend_yield,
        volatility=args.vol,
        days_to_expiry=args.days,
        steps=args.steps,
        lam=args.lam,
    )
    price = price_request(request, parallel=args.parallel)
    echo = (
        f"style={request.style} right={request.right} "
        f"model={request.model} method={request.method} "
        f"spot={request.spot:g} strike={request.strike:g} "
        f"rate={request.rate:g} yield={request.dividend_yield:g} "
        f"vol={request.volatility:g} days={request.days_to_expiry} "
        f"steps={request.steps}"
    )
    if request.model == "bsm":
        echo += f" lambda={DEFAULT_LAMBDA if request.lam is None else request.lam:g}"
    print(echo)
    print(f"{price:.10g}")
    return 0


# ---------------------------------------------------------------------------
# verify


def _draw_spec(
    rng: np.random.Generator,
    *,
    moneyness_band: float | None = None,
) -> OptionSpec:
    """Draw a random valid spec from the documented verification ranges.

    ``moneyness_band`` rejects draws whose standardized log-moneyness
    falls outside ``[-band, band]``: oracle-equivalence suites compare
    relative errors, which are uninformative when the option value
    underflows toward zero far from the money.
    """
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
            steps=1,
        )


def _with_steps(spec: OptionSpec, steps: int) -> OptionSpec:
    return OptionSpec(
        spot=spec.spot,
        strike=spec.strike,
        rate=spec.rate,
        dividend_yield=spec.dividend_yield,
        volatility=spec.volatility,
        days_to_expiry=spec.days_to_expiry,
        steps=steps,
    )


def _rel_err(value: float, oracle: float, scale: float) -> float:
    """Relative error with an absolute floor for near-zero oracles."""
    return abs(value - oracle) / max(abs(oracle), 1e-9 * scale)


def _spec_line(spec: OptionSpec) -> str:
    return (
        f"spot={spec.spot!r} strike={spec.strike!r} rate={spec.rate!r} "
        f"yield={spec.dividend_yield!r} vol={spec.volatility!r} "
        f"days={spec.days_to_expiry} steps={spec.steps}"
    )


def _suite_fft(
    rng: np.random.Generator, trials: int, max_steps: int
) -> tuple[float, list[str]]:
    """Round-trip, convolution, kernel-power, and linear-step oracles.

    Returns the worst error/tolerance ratio and failure descriptions.
    """
    worst = 0.0
    failures: list[str] = []
    for trial in range(trials):
        # Transform round-trip on a power-of-two complex vector.
        size = 2 ** int(rng.integers(0, 10))
        vec = rng.standard_normal(size) + 1j * rng.standard_normal(size)
        back = fft_inverse(fft_forward(vec))
        err = float(np.max(np.abs(back - vec))) / 1e-12
        worst = max(worst, err)
        if err > 1.0:
            failures.append(f"round-trip size={size} err-ratio={err:.3g}")

        # Convolution against direct summation.
        a = rng.standard_normal(int(rng.integers(1, 65)))
        b = rng.standard_normal(int(rng.integers(1, 65)))
        got = fft_convolve(a, b)
        ref = np.convolve(a, b)
        scale = max(1.0, float(np.max(np.abs(ref))))
        err = float(np.max(np.abs(got - ref))) / scale / 1e-10
        worst = max(worst, err)
        if err > 1.0:
            failures.append(
                f"convolve sizes=({len(a)},{len(b)}) err-ratio={err:.3g}"
            )

        # Kernel powering against repeated direct convolution.
        nw = int(rng.integers(2, 4))
        weights = rng.uniform(0.1, 0.9, size=nw)
        weights /= weights.sum()
        power = int(rng.integers(0, 7))
        kern = Kernel(weights=weights, min_offset=int(rng.integers(-2, 3)))
        got_k = kernel_power(kern, power)
        ref_w = np.array([1.0])
        for _ in range(power):
            ref_w = np.convolve(ref_w, weights)
        err = float(np.max(np.abs(got_k.weights - ref_w))) / 1e-10
        worst = max(worst, err)
        if err > 1.0:
            failures.append(f"kernel_power h={power} err-ratio={err:.3g}")
        if got_k.min_offset != power * kern.min_offset:
            failures.append(
                f"kernel_power h={power} offset {got_k.min_offset} != "
                f"{power * kern.min_offset}"
            )

        # Composed linear steps against explicit per-step sweeps.
        steps = int(rng.integers(1, 6))
        span = (len(weights) - 1) * steps
        n = int(rng.integers(span + 1, span + 64))
        row = GridRow(
            time_index=steps,
            col_offset=int(rng.integers(-5, 6)),
            values=rng.uniform(0.0, 1.0, size=n),
        )
        got_row = apply_linear_steps(row, kern, steps, direction=-1)
        ref_vals = row.values
        for _ in range(steps):
            out = np.zeros(len(ref_vals) - len(weights) + 1)
            for w_i, w in enumerate(weights):
                out += w * ref_vals[w_i : w_i + len(out)]
            ref_vals = out
        scale = max(1.0, float(np.max(np.abs(ref_vals))))
        err = float(np.max(np.abs(got_row.values - ref_vals))) / scale / 1e-9
        worst = max(worst, err)
        if err > 1.0:
            failures.append(
                f"apply_linear_steps n={n} h={steps} err-ratio={err:.3g}"
            )
    return worst, failures


def _suite_european(
    rng: np.random.Generator, trials: int, max_steps: int
) -> tuple[float, list[str]]:
    """Fast European pricer against the quadratic baseline."""
    worst = 0.0
    failures: list[str] = []
    hi = max(64, min(max_steps, 65536))
    for _ in range(trials):
        spec = _with_steps(
            _draw_spec(rng, moneyness_band=3.0), int(rng.integers(64, hi + 1))
        )
        fast = fast_european(spec)
        base = baseline_european(spec)
        err = _rel_err(fast, base, spec.spot) / 1e-8
        worst = max(worst, err)
        if err > 1.0:
            failures.append(f"err-ratio={err:.3g} {_spec_line(spec)}")
    return worst, failures


def _suite_american(
    rng: np.random.Generator, trials: int, max_steps: int
) -> tuple[float, list[str]]:
    """Fast American call against the baseline; dominance invariant."""
    worst = 0.0
    failures: list[str] = []
    hi = max(64, min(max_steps, 4096))
    for _ in range(trials):
        spec = _with_steps(
            _draw_spec(rng, moneyness_band=3.0), int(rng.integers(64, hi + 1))
        )
        fast = fast_american_call(spec)
        base = baseline_american_call(spec)
        err = _rel_err(fast.price, base.price, spec.spot) / 1e-8
        worst = max(worst, err)
        if err > 1.0:
            failures.append(f"price err-ratio={err:.3g} {_spec_line(spec)}")
        for t, col in fast.boundaries.as_dict().items():
            if base.boundaries.at(int(t)) != col:
                failures.append(
                    f"boundary mismatch at row {t}: fast={col} "
                    f"baseline={base.boundaries.at(int(t))} {_spec_line(spec)}"
                )
                break
        euro = baseline_european(spec)
        if base.price < euro - 1e-12:
            failures.append(
                f"american {base.price!r} < european {euro!r} "
                f"{_spec_line(spec)}"
            )
    return worst, failures


def _suite_lemmas(
    rng: np.random.Generator, trials: int, max_steps: int
) -> tuple[float, list[str]]:
    """Cell-exact boundary lemmas on full baseline American grids."""
    failures: list[str] = []
    hi = max(16, min(max_steps, 512))
    for _ in range(trials):
        spec = _with_steps(_draw_spec(rng), int(rng.integers(16, hi + 1)))
        bad = check_boundary_lemmas(spec)
        if bad:
            failures.append(f"{bad} {_spec_line(spec)}")
    return 0.0, failures


def check_boundary_lemmas(spec: OptionSpec) -> str | None:
    """Check the six boundary lemmas on one full baseline grid.

    Returns ``None`` when all hold, else a short description of the
    first violation.  Shared by ``verify`` and usable directly in
    diagnostics.
    """
    n = spec.steps
    result = baseline_american_call(spec, keep_grid=True)
    rows = result.rows
    masks = result.exercise_masks
    assert rows is not None and masks is not None
    params = derive_binomial_params(spec)

    # The downward-closure and floor statements compare exercise against
    # continuation, which only the interior rows do (the terminal row is
    # classified by raw payoff sign).  They are therefore checked on
    # interior rows only; across the terminal junction the continuation
    # run may legitimately widen when the rate outruns the yield.  The
    # diagonal statement and the one-column left-drift bound survive the
    # junction and are checked on every row pair.
    dt = params.step_years
    floor_shift = None
    if spec.rate > 0.0 and spec.dividend_yield > 0.0:
        ratio = math.expm1(spec.rate * dt) / math.expm1(
            spec.dividend_yield * dt
        )
        floor_shift = (
            math.log(spec.strike / spec.spot)
            + math.log(ratio)
            - (spec.rate - spec.dividend_yield) * dt
        ) / (2.0 * spec.volatility * math.sqrt(dt))

    bounds = np.empty(n + 1, dtype=np.int64)
    for i in range(n + 1):
        mask = masks[i]
        if mask.any():
            first = int(np.argmax(mask))
            if not mask[first:].all():
                return f"(a) row {i}: green run not a suffix"
            bounds[i] = first
        else:
            bounds[i] = i + 1  # all red: boundary just past the row end
    for i in range(n):
        below = masks[i + 1]
        here = masks[i]
        if i < n - 1 and np.any(below[: i + 1] & ~here):
            return f"(b) row {i}: green below without green above"
        if np.any(~below[1 : i + 2] & here):
            return f"(c) row {i}: red diagonal below a green cell"
    for i in range(1, n - 1):
        if np.any(rows[i][:i] < rows[i + 2][1 : i + 1] - 1e-12):
            return f"(d) row {i}: two-step decay violated"
    for i in range(n):
        if bounds[i] < bounds[i + 1] - 1 or (
            i < n - 1 and bounds[i] > bounds[i + 1]
        ):
            return (
                f"(e) rows {i},{i + 1}: boundary step "
                f"{bounds[i]} vs {bounds[i + 1]}"
            )
    if floor_shift is not None:
        for i in range(n):
            if bounds[i] <= i and bounds[i] < i / 2.0 + floor_shift - 1e-9:
                return (
                    f"(f) row {i}: green at {bounds[i]} below floor "
                    f"{i / 2.0 + floor_shift:.6g}"
                )
    return None


def _suite_bsm_theorems(
    rng: np.random.Generator, trials: int, max_steps: int
) -> tuple[float, list[str]]:
    """Boundary step/monotonicity theorems and the stability identity."""
    worst = 0.0
    failures: list[str] = []
    hi = max(64, min(max_steps, 2048))
    done = 0
    while done < trials:
        spec = _with_steps(
            _draw_spec(rng, moneyness_band=3.0), int(rng.integers(64, hi + 1))
        )
        try:
            disc = discretize_bsm(spec)
        except (StabilityError, DomainError):
            continue  # the anchored grid rejects this draw; redraw
        done += 1
        total = disc.coef_down + disc.coef_mid + disc.coef_up
        ident = 1.0 - disc.omega * disc.d_tau
        err = abs(total - ident) / (4.0 * np.spacing(max(abs(ident), 1.0)))
        worst = max(worst, err)
        if err > 1.0:
            failures.append(
                f"weight identity off by {total - ident!r} {_spec_line(spec)}"
            )
        result = baseline_put_fd(spec)
        cols = result.boundaries.columns
        seen_sentinel = False
        prev: int | None = None
        for col in cols:
            if col == NO_GREEN:
                seen_sentinel = True
                continue
            if seen_sentinel:
                failures.append(
                    f"boundary reappeared after leaving the window "
                    f"{_spec_line(spec)}"
                )
                break
            if prev is not None and not 0 <= prev - col <= 1:
                failures.append(
                    f"boundary step {prev} -> {col} {_spec_line(spec)}"
                )
                break
            prev = int(col)
    return worst, failures


def _suite_bsm_oracle(
    rng: np.random.Generator, trials: int, max_steps: int
) -> tuple[float, list[str]]:
    """Fast put against the baseline: price, boundary, payoff dominance."""
    worst = 0.0
    failures: list[str] = []
    hi = max(64, min(max_steps, 2048))
    done = 0
    while done < trials:
        spec = _with_steps(
            _draw_spec(rng, moneyness_band=3.0), int(rng.integers(64, hi + 1))
        )
        try:
            disc = discretize_bsm(spec)
        except (StabilityError, DomainError):
            continue
        done += 1
        fast = fast_put_bsm(spec, record_rows=True)
        base = baseline_put_fd(spec)
        err = _rel_err(fast.price, base.price, spec.spot) / 1e-8
        worst = max(worst, err)
        if err > 1.0:
            failures.append(f"price err-ratio={err:.3g} {_spec_line(spec)}")
        for t, col in fast.boundaries.as_dict().items():
            ref = base.boundaries.at(int(t))
            if ref != NO_GREEN and ref != col:
                failures.append(
                    f"boundary mismatch at row {t}: fast={col} "
                    f"baseline={ref} {_spec_line(spec)}"
                )
                break
        if fast.rows:
            for t, row in fast.rows.items():
                cols = np.arange(row.first_col, row.last_col + 1)
                payoff = np.maximum(1.0 - np.exp(cols * disc.d_s), 0.0)
                if np.any(row.values < payoff - 1e-12):
                    failures.append(
                        f"payoff dominance violated at row {t} "
                        f"{_spec_line(spec)}"
                    )
                    break
        floor = max(bsm_green_value(disc, disc.k_star), 0.0) * spec.strike
        if base.price < floor - 1e-12 * spec.strike:
            failures.append(
                f"apex {base.price!r} below payoff floor {floor!r} "
                f"{_spec_line(spec)}"
            )
    return worst, failures


_SUITES = (
    ("fft-engine", _suite_fft),
    ("european-oracle", _suite_european),
    ("american-oracle", _suite_american),
    ("binomial-lemmas", _suite_lemmas),
    ("bsm-theorems", _suite_bsm_theorems),
    ("bsm-oracle", _suite_bsm_oracle),
)


def cmd_verify(args: argparse.Namespace) -> int:
    trials = args.reps
    if trials < 0:
        raise ValidationError("reps", "trials must be >= 0")
    if trials == 0:
        return 0
    max_steps = args.steps
    if max_steps < 64:
        raise ValidationError("steps", "verification needs steps >= 64")
    failed = False
    for index, (name, suite) in enumerate(_SUITES):
        rng = np.random.default_rng([args.seed, index])
        worst, failures = suite(rng, trials, max_steps)
        status = "FAIL" if failures else "PASS"
        print(
            f"{name:<17} {status}  worst-error/tolerance {worst:.3e}  "
            f"trials {trials}"
        )
        for line in failures:
            print(f"  {line}")
        failed = failed or bool(failures)
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# bench


_BENCH_METHODS = (
    "fast_european",
    "baseline_european",
    "gaussian_european",
    "closed_form_european",
    "fast_american",
    "baseline_american",
    "fast_put",
    "baseline_put",
)


def _bench_call(method: str, spec: OptionSpec, lam: float, parallel: bool):
    if method == "fast_european":
        return fast_european(spec)
    if method == "baseline_european":
        return baseline_european(spec)
    if method == "gaussian_european":
        return gaussian_approx_european(spec)
    if method == "closed_form_european":
        return closed_form_european(spec)
    if method == "fast_american":
        return fast_american_call(spec, parallel=parallel).price
    if method == "baseline_american":
        return baseline_american_call(spec).price
    if method == "fast_put":
        return fast_put_bsm(spec, lam, parallel=parallel).price
    return baseline_put_fd(spec, lam).price


def cmd_bench(args: argparse.Namespace) -> int:
    methods = [m.strip() for m in args.method.split(",") if m.strip()]
    for method in methods:
        if method not in _BENCH_METHODS:
            raise UnsupportedCombinationError(
                f"unknown bench method {method!r}; "
                f"choose from {', '.join(_BENCH_METHODS)}"
            )
    try:
        step_list = sorted({int(tok) for tok in args.steps.split(",") if tok})
    except ValueError as exc:
        raise ValidationError("steps", f"bad step list: {exc}") from None
    if not step_list or step_list[0] < 1:
        raise ValidationError("steps", "step counts must be positive")
    if args.reps < 1:
        raise ValidationError("reps", "reps must be >= 1")

    records: list[BenchRecord] = []
    for method in methods:
        warm = _with_steps(
            OptionSpec(
                spot=args.spot,
                strike=args.strike,
                rate=args.rate,
                dividend_yield=args.dividend_yield,
                volatility=args.vol,
                days_to_expiry=args.days,
                steps=1,
            ),
            step_list[0],
        )
        _bench_call(method, warm, args.lam, args.parallel)  # JIT warm-up
        for steps in step_list:
            spec = _with_steps(warm, steps)
            price = 0.0
            timings: list[float] = []
            for _ in range(args.reps):
                start = time.perf_counter()
                price = float(_bench_call(method, spec, args.lam, args.parallel))
                timings.append(time.perf_counter() - start)
            records.append(
                BenchRecord(
                    method=method,
                    steps=steps,
                    seconds=statistics.median(timings),
                    price=price,
                    reps=args.reps,
                )
            )

    out = open(args.csv, "w", newline="") if args.csv else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(["method", "T", "seconds", "price", "reps"])
        for rec in records:
            writer.writerow(
                [
                    rec.method,
                    str(rec.steps),
                    repr(rec.seconds),
                    repr(rec.price),
                    str(rec.reps),
                ]
            )
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


# ---------------------------------------------------------------------------
# batch


_BATCH_HEADER = [
    "style",
    "right",
    "model",
    "method",
    "S",
    "K",
    "R",
    "Y",
    "V",
    "E",
    "T",
]

_FIELD_TO_COLUMN = {
    "spot": "S",
    "strike": "K",
    "rate": "R",
    "dividend_yield": "Y",
    "volatility": "V",
    "days_to_expiry": "E",
    "steps": "T",
    "lam": "lambda",
}


def _batch_row_price(row: list[str], has_lambda: bool, parallel: bool) -> str:
    """Price one batch row; raises with a column-mapped field on error."""
    style, right, model, method = (tok.strip() for tok in row[:4])
    numeric: dict[str, float | int] = {}
    for field, col, conv in (
        ("spot", 4, float),
        ("strike", 5, float),
        ("rate", 6, float),
        ("dividend_yield", 7, float),
        ("volatility", 8, float),
        ("days_to_expiry", 9, int),
        ("steps", 10, int),
    ):
        try:
            numeric[field] = conv(row[col].strip())
        except ValueError:
            raise ValidationError(
                field, f"cannot parse {_BATCH_HEADER[col]}={row[col]!r}"
            ) from None
    lam: float | None = None
    if has_lambda and len(row) > 11 and row[11].strip():
        try:
            lam = float(row[11])
        except ValueError:
            raise ValidationError(
                "lam", f"cannot parse lambda={row[11]!r}"
            ) from None
    request = PricingRequest(
        style=style,
        right=right,
        model=model,
        method=method,
        spot=float(numeric["spot"]),
        strike=float(numeric["strike"]),
        rate=float(numeric["rate"]),
        dividend_yield=float(numeric["dividend_yield"]),
        volatility=float(numeric["volatility"]),
        days_to_expiry=int(numeric["days_to_expiry"]),
        steps=int(numeric["steps"]),
        lam=lam,
    )
    return repr(float(price_request(request, parallel=parallel)))


def cmd_batch(args: argparse.Namespace) -> int:
    if not args.csv:
        raise OSError("batch requires --csv with the portfolio file")
    with open(args.csv, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        has_lambda = False
        if header is not None:
            header = [tok.strip() for tok in header]
        if header is None or header[: len(_BATCH_HEADER)] != _BATCH_HEADER:
            print("error: malformed header", file=sys.stderr)
            return 4
        if len(header) == len(_BATCH_HEADER) + 1:
            if header[-1] != "lambda":
                print("error: malformed header", file=sys.stderr)
                return 4
            has_lambda = True
        elif len(header) != len(_BATCH_HEADER):
            print("error: malformed header", file=sys.stderr)
            return 4

        writer = csv.writer(sys.stdout)
        writer.writerow([*header, "price", "status"])
        for row in reader:
            if not row:
                continue
            if len(row) < len(header):
                writer.writerow([*row, "", f"error:{header[len(row)]}"])
                continue
            if len(row) > len(header):
                writer.writerow([*row, "", f"error:{header[-1]}"])
                continue
            try:
                price = _batch_row_price(row, has_lambda, args.parallel)
            except UnsupportedCombinationError:
                writer.writerow([*row, "", "error:method"])
            except ValidationError as exc:
                col = _FIELD_TO_COLUMN.get(exc.field, exc.field)
                writer.writerow([*row, "", f"error:{col}"])
            except StabilityError:
                writer.writerow([*row, "", "error:lambda"])
            except PricingError:
                writer.writerow([*row, "", "error:S"])
            else:
                writer.writerow([*row, price, "ok"])
    return 0


# ---------------------------------------------------------------------------
# parser / entry point


def _add_spec_flags(
    parser: argparse.ArgumentParser,
    *,
    require: bool,
    spot: float = 100.0,
    strike: float = 100.0,
    rate: float = 0.05,
    dividend_yield: float = 0.03,
    vol: float = 0.2,
    days: int = 365,
) -> None:
    parser.add_argument("--spot", type=float, required=require, default=spot)
    parser.add_argument(
        "--strike", type=float, required=require, default=strike
    )
    parser.add_argument("--rate", type=float, default=rate)
    parser.add_argument(
        "--yield", dest="dividend_yield", type=float, default=dividend_yield
    )
    parser.add_argument("--vol", type=float, required=require, default=vol)
    parser.add_argument("--days", type=int, required=require, default=days)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fftlattice",
        description="Fast lattice and finite-difference option pricing.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_price = sub.add_parser("price", help="price a single option")
    p_price.add_argument("--style", required=True)
    p_price.add_argument("--right", required=True)
    p_price.add_argument("--model", required=True)
    p_price.add_argument("--method", required=True)
    _add_spec_flags(p_price, require=True)
    p_price.add_argument("--steps", type=int, required=True)
    p_price.add_argument("--lambda", dest="lam", type=float, default=None)
    p_price.add_argument("--parallel", action="store_true")
    p_price.set_defaults(func=cmd_price)

    p_verify = sub.add_parser(
        "verify", help="run randomized oracle and invariant suites"
    )
    p_verify.add_argument(
        "--steps",
        type=int,
        default=1024,
        help="largest step count exercised (default 1024)",
    )
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument(
        "--reps",
        type=int,
        default=25,
        help="randomized trials per suite (default 25)",
    )
    p_verify.set_defaults(func=cmd_verify)

    p_bench = sub.add_parser("bench", help="time methods and emit CSV")
    p_bench.add_argument(
        "--method",
        required=True,
        help=f"comma-separated: {', '.join(_BENCH_METHODS)}",
    )
    p_bench.add_argument(
        "--steps", required=True, help="comma-separated step counts"
    )
    _add_spec_flags(p_bench, require=False)
    p_bench.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)
    p_bench.add_argument("--reps", type=int, default=3)
    p_bench.add_argument("--csv", default=None, help="output path (default stdout)")
    p_bench.add_argument("--parallel", action="store_true")
    p_bench.set_defaults(func=cmd_bench)

    p_batch = sub.add_parser("batch", help="price a CSV portfolio")
    p_batch.add_argument("--csv", required=True, help="input portfolio CSV")
    p_batch.add_argument("--parallel", action="store_true")
    p_batch.set_defaults(func=cmd_batch)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UnsupportedCombinationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except PricingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
