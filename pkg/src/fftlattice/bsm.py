"""American put pricing on a log-price finite-difference grid.

The put is priced under a Black-Scholes-Merton transformation: working in
log-moneyness and scaled time, the free-boundary problem becomes an
explicit three-point marching scheme on an integer grid whose initial row
is the (rescaled) exercise payoff and whose apex recovers the option
price.  The grid is anchored so that the spot lies exactly on a node.

Two solvers share that discretization:

* :func:`baseline_put_fd` marches every row of the shrinking dependency
  window explicitly -- quadratic work, used as the reference.
* :func:`fast_put_bsm` tracks only the values strictly above the exercise
  boundary, advancing many steps at once: FFT-composed linear steps cover
  the region that provably stays unexercised, while a divide-and-conquer
  recursion (:func:`solve_bsm_trapezoid`) locates the boundary's new
  position.  Work drops to roughly the explicit cost of a thin band
  around the boundary.

Exercise ("green") cells hold the raw payoff; continuation ("red") cells
hold the discounted expectation.  Ties classify as exercise.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .fft import Kernel, convolve, kernel_power
from .model import (
    NO_GREEN,
    BoundarySeries,
    DomainError,
    GeometryError,
    GridRow,
    OptionSpec,
    StabilityError,
    ValidationError,
    validate_spec,
)

__all__ = [
    "DEFAULT_BSM_CUTOFF",
    "BsmDiscretization",
    "PutRowState",
    "PutResult",
    "discretize_bsm",
    "bsm_green_value",
    "initial_row",
    "baseline_put_fd",
    "solve_bsm_trapezoid",
    "fast_put_bsm",
]

DEFAULT_BSM_CUTOFF = 128
"""Height at or below which the boundary recursion marches explicitly.

Tunable per call; the default is the measured optimum on x86-64
(~365 ms at T = 2^17 vs ~388/490 ms for 64/32).
"""

DEFAULT_LAMBDA = 0.4
"""Default grid ratio (scaled time step over squared space step)."""


@dataclass(frozen=True, slots=True)
class BsmDiscretization:
    """Frozen description of the log-price grid for one put problem.

    Attributes
    ----------
    steps:
        Number of time steps ``T`` between the payoff row and the apex.
    omega:
        Dimensionless rate ``2 r / sigma^2`` entering the drift term.
    tau_max:
        Total scaled time ``sigma^2 * years / 2``.
    d_tau:
        Scaled time step ``tau_max / steps``.
    d_s:
        Log-price step.  Chosen near ``sqrt(d_tau / lam)`` and then
        snapped so that the spot sits exactly on grid node ``k_star``.
    k_star:
        Signed node index of the spot relative to the strike node.
    lam:
        Requested grid ratio (before anchoring adjusts ``d_s``).
    coef_down, coef_mid, coef_up:
        Explicit-scheme weights applied to the lower, same, and upper
        neighbour of the previous row.  All are nonnegative (enforced at
        construction) and sum to ``1 - omega * d_tau``.
    """

    steps: int
    omega: float
    tau_max: float
    d_tau: float
    d_s: float
    k_star: int
    lam: float
    coef_down: float
    coef_mid: float
    coef_up: float


@dataclass(frozen=True)
class PutRowState:
    """Continuation values of one grid row, right of the exercise boundary.

    ``boundary`` is the column of the highest exercise cell of row
    ``time_index`` (every cell at or below it is exercise-valued, i.e.
    equal to the raw payoff).  ``segment`` holds the continuation values
    on columns ``boundary + 1 .. segment.last_col``.
    """

    time_index: int
    boundary: int
    segment: GridRow

    def __post_init__(self) -> None:
        if len(self.segment) == 0:
            raise GeometryError("put row state requires a nonempty segment")
        if self.segment.first_col != self.boundary + 1:
            raise GeometryError(
                "segment must start immediately above the boundary: "
                f"expected first column {self.boundary + 1}, "
                f"got {self.segment.first_col}"
            )


@dataclass(frozen=True)
class PutResult:
    """Price plus the exercise-boundary trace of an American put solve.

    ``boundaries`` records, for each reported row, the column of the
    highest exercise cell (``NO_GREEN`` when the scanned window contained
    none).  The baseline reports every row; the fast solver reports only
    the rows where its recursion hands off.  ``rows`` optionally carries
    snapshots of continuation values for structural checks.
    """

    price: float
    boundaries: BoundarySeries
    rows: dict[int, GridRow] | None = field(default=None)


def discretize_bsm(
    spec: OptionSpec,
    lam: float = DEFAULT_LAMBDA,
    steps: int | None = None,
) -> BsmDiscretization:
    """Build the anchored log-price grid for an American put.

    The space step starts at ``sqrt(d_tau / lam)`` and is then adjusted
    so the spot falls exactly on node ``k_star = round(ln(S/K) / d_s)``.
    Raises :class:`StabilityError` if any scheme weight goes negative —
    the stable region is roughly ``0 < lam <= 0.5`` with a little slack
    eaten by the drift term and the anchoring adjustment; the error
    names the offending weight.  Raises :class:`DomainError` when the
    spot is too many nodes away from the strike for the requested
    resolution.
    """
    validate_spec(spec)
    n = spec.steps if steps is None else steps
    if n < 1:
        raise ValidationError("steps", "steps must be >= 1")
    if not (math.isfinite(lam) and lam > 0.0):
        raise ValidationError("lam", f"lambda must be positive, got {lam!r}")
    if spec.strike <= 0.0:
        raise DomainError("put grid requires a positive strike")

    # Scaled time uses the option's own tenor; an explicit ``steps``
    # override refines the same tenor rather than changing it.
    years = spec.years
    omega = 2.0 * spec.rate / (spec.volatility**2)
    tau_max = 0.5 * spec.volatility**2 * years
    d_tau = tau_max / n

    d_s = math.sqrt(d_tau / lam)
    log_moneyness = math.log(spec.spot / spec.strike)
    k_star = round(log_moneyness / d_s)
    if abs(k_star) > 8 * n:
        raise DomainError(
            "spot lies too many grid nodes from the strike: "
            f"|{k_star}| > {8 * n}"
        )
    if k_star != 0:
        d_s = log_moneyness / k_star

    lam_eff = d_tau / (d_s * d_s)
    drift = (omega - 1.0) * d_tau / (2.0 * d_s)
    coef_up = lam_eff + drift
    coef_down = lam_eff - drift
    coef_mid = 1.0 - omega * d_tau - 2.0 * lam_eff

    if coef_mid < 0.0:
        raise StabilityError(
            "coef_mid",
            f"centre weight {coef_mid:.6g} is negative; "
            "choose a smaller lambda",
        )
    if coef_up < 0.0:
        raise StabilityError(
            "coef_up",
            f"upper weight {coef_up:.6g} is negative; "
            "increase steps or adjust lambda",
        )
    if coef_down < 0.0:
        raise StabilityError(
            "coef_down",
            f"lower weight {coef_down:.6g} is negative; "
            "increase steps or adjust lambda",
        )

    return BsmDiscretization(
        steps=n,
        omega=omega,
        tau_max=tau_max,
        d_tau=d_tau,
        d_s=d_s,
        k_star=k_star,
        lam=lam,
        coef_down=coef_down,
        coef_mid=coef_mid,
        coef_up=coef_up,
    )


def bsm_green_value(disc: BsmDiscretization, col: int) -> float:
    """Raw (unclipped) rescaled put payoff ``1 - e^(col * d_s)``.

    Positive below the strike node, negative above it; multiplying by
    the strike restores currency units.
    """
    return 1.0 - math.exp(col * disc.d_s)


def _payoff_slice(disc: BsmDiscretization, lo: int, hi: int) -> np.ndarray:
    """Vector of raw payoffs on columns ``lo .. hi`` inclusive."""
    cols = np.arange(lo, hi + 1, dtype=np.float64)
    return 1.0 - np.exp(cols * disc.d_s)


def initial_row(disc: BsmDiscretization) -> PutRowState:
    """Payoff-row state over the full dependency window of the apex.

    The window spans columns ``k_star - steps .. k_star + steps``; the
    clipped payoff ``max(1 - e^(k d_s), 0)`` is positive exactly below
    the strike node and ties to the payoff at it, so the boundary sits
    at column 0 and every continuation value above it is exactly zero.
    """
    n = disc.steps
    width = disc.k_star + n  # columns 1 .. k_star + steps
    if width < 1:
        raise DomainError(
            "the payoff row has no continuation cells; the spot is deep "
            "enough in the money that the price is strike - spot"
        )
    return PutRowState(
        time_index=0,
        boundary=0,
        segment=GridRow(
            time_index=0,
            col_offset=1,
            values=np.zeros(width, dtype=np.float64),
        ),
    )


def baseline_put_fd(
    spec: OptionSpec,
    lam: float = DEFAULT_LAMBDA,
    steps: int | None = None,
    *,
    record_rows: tuple[int, ...] | None = None,
) -> PutResult:
    """Price an American put by explicit marching over the full window.

    Every row of the shrinking dependency window is recomputed with the
    projected three-point scheme, so total work is quadratic in the step
    count.  The boundary column is recorded for every row; rows whose
    window no longer reaches down to the true boundary record
    ``NO_GREEN``.  ``record_rows`` snapshots the valid continuation
    window of the named rows for structural checks.
    """
    disc = discretize_bsm(spec, lam, steps)
    n = disc.steps
    lo = disc.k_star - n
    payoff = _payoff_slice(disc, lo, disc.k_star + n)
    values = np.maximum(payoff, 0.0)

    last_green = np.empty(n + 1, dtype=np.int64)
    snapshots: dict[int, GridRow] | None = None

    targets: list[int] = []
    if record_rows is not None:
        targets = sorted({t for t in record_rows if 0 < t <= n})
        snapshots = {}

    cur = 0
    for stop in [*targets, n]:
        if stop > cur:
            _accel.put_march_window(
                values,
                payoff,
                cur,
                stop,
                disc.coef_down,
                disc.coef_mid,
                disc.coef_up,
                last_green,
            )
            cur = stop
        if snapshots is not None and stop in targets:
            lo_off = stop
            hi_off = values.shape[0] - 1 - stop
            snapshots[stop] = GridRow(
                time_index=stop,
                col_offset=lo + lo_off,
                values=values[lo_off : hi_off + 1].copy(),
            )

    price = float(spec.strike * values[(values.shape[0] - 1) // 2])

    cols = np.empty(n + 1, dtype=np.int64)
    # At the payoff row the highest exercise cell is the strike node
    # (payoff ties classify as exercise), clipped to the window.
    cols[0] = min(0, disc.k_star + n)
    for r in range(1, n + 1):
        lg = last_green[r]
        cols[r] = lo + lg if lg != _accel.NONE_SEEN else NO_GREEN
    series = BoundarySeries(
        times=np.arange(n + 1, dtype=np.int64), columns=cols
    )
    return PutResult(price=price, boundaries=series, rows=snapshots)


class _BsmCtx:
    """Shared per-solve state for the put boundary recursion."""

    __slots__ = ("disc", "cutoff", "pool", "_kernel", "_powers")

    def __init__(
        self,
        disc: BsmDiscretization,
        cutoff: int,
        pool: ThreadPoolExecutor | None,
    ) -> None:
        self.disc = disc
        self.cutoff = cutoff
        self.pool = pool
        self._kernel = Kernel(
            weights=np.array(
                [disc.coef_down, disc.coef_mid, disc.coef_up],
                dtype=np.float64,
            ),
            min_offset=-1,
        )
        self._powers: dict[int, Kernel] = {}

    def power(self, h: int) -> Kernel:
        got = self._powers.get(h)
        if got is None:
            got = kernel_power(self._kernel, h)
            self._powers[h] = got
        return got


class _Immediate:
    """Future-shaped wrapper around an already-computed value."""

    __slots__ = ("_value",)

    def __init__(self, value: np.ndarray) -> None:
        self._value = value

    def result(self) -> np.ndarray:
        return self._value


def _valid_corr(vals: np.ndarray, composed: Kernel) -> np.ndarray:
    """Valid-mode correlation of ``vals`` with a composed kernel."""
    lw = len(composed)
    return convolve(vals, composed.weights[::-1])[lw - 1 : len(vals)]


def _evolve_async(ctx: _BsmCtx, vals: np.ndarray, h: int):
    """Apply ``h`` composed linear steps, possibly on the worker thread.

    The composed kernel is resolved on the caller's thread so the cache
    is never touched concurrently.
    """
    composed = ctx.power(h)
    if ctx.pool is not None and len(vals) >= 2048:
        return ctx.pool.submit(_valid_corr, vals, composed)
    return _Immediate(_valid_corr(vals, composed))


def _strip_advance(
    ctx: _BsmCtx,
    time_index: int,
    boundary: int,
    seg: np.ndarray,
    height: int,
) -> tuple[int, np.ndarray]:
    """Explicitly march ``height`` rows of a strip around the boundary.

    ``seg`` holds continuation values on columns ``boundary + 1 ..
    boundary + len(seg)``.  Returns the new boundary column and the
    continuation values on ``new_boundary + 1 .. boundary + len(seg) -
    height`` (the part of the strip that stays inside the valid cone).
    """
    disc = ctx.disc
    f = boundary
    hi = f + seg.shape[0]
    lo = f - 2 * height - 1
    width = hi - lo + 1
    arr = np.empty(width, dtype=np.float64)
    payoff = _payoff_slice(disc, lo, hi)
    arr[: f - lo + 1] = payoff[: f - lo + 1]
    arr[f - lo + 1 :] = seg
    kb = _accel.bsm_strip_sweep(
        arr,
        payoff,
        lo,
        height,
        disc.coef_down,
        disc.coef_mid,
        disc.coef_up,
    )
    if kb == _accel.NONE_SEEN or not f - height <= kb <= f:
        raise GeometryError(
            f"strip sweep lost the exercise boundary near column {f} "
            f"(row {time_index}, height {height})"
        )
    out = arr[kb + 1 - lo : hi - height - lo + 1].copy()
    return kb, out


def _solve_q(
    ctx: _BsmCtx,
    time_index: int,
    boundary: int,
    seg: np.ndarray,
    height: int,
) -> tuple[int, np.ndarray]:
    """Advance the boundary-tracking recursion by ``height`` rows.

    ``seg`` holds exactly ``2 * height`` continuation values of row
    ``time_index`` on columns ``boundary + 1 .. boundary + 2 * height``.
    Returns ``(new_boundary, values)`` where ``values`` covers columns
    ``new_boundary + 1 .. boundary + height`` of row ``time_index +
    height``.  The new boundary provably lies within ``height`` columns
    below the old one, so those outputs are always well defined.
    """
    h = height
    f = boundary
    if seg.shape[0] != 2 * h:
        raise GeometryError(
            f"recursion expects {2 * h} continuation values, got {seg.shape[0]}"
        )
    if h <= ctx.cutoff:
        return _strip_advance(ctx, time_index, f, seg, h)

    h1 = (h + 1) // 2
    h2 = h - h1

    # Columns above f + 2*h1 - h1 stay linear for h1 steps regardless of
    # where the boundary moves, so their evolution is a pure convolution.
    mid_task = _evolve_async(ctx, seg, h1)
    km, upper = _solve_q(ctx, time_index, f, seg[: 2 * h1], h1)
    if not f - h1 <= km <= f:
        raise GeometryError(
            f"sub-solve returned boundary {km} outside [{f - h1}, {f}]"
        )
    mid = mid_task.result()  # columns f + h1 + 1 .. f + 2*h - h1

    assembled = np.concatenate([upper, mid])
    expected = (f + 2 * h - h1) - km
    if assembled.shape[0] != expected:
        raise GeometryError(
            f"assembled row spans {assembled.shape[0]} columns, "
            f"expected {expected}"
        )

    # Everything above km + 2*h2 - h2 is linear for the remaining h2
    # steps; the recursion pins down the boundary inside the lower part.
    bottom_task = _evolve_async(ctx, assembled, h2)
    kp, lower = _solve_q(ctx, time_index + h1, km, assembled[: 2 * h2], h2)
    bottom = bottom_task.result()  # columns km + h2 + 1 .. f + h

    out = np.concatenate([lower, bottom])
    if out.shape[0] != (f + h) - kp:
        raise GeometryError(
            f"recursion output spans {out.shape[0]} columns, "
            f"expected {(f + h) - kp}"
        )
    return kp, out


def solve_bsm_trapezoid(
    disc: BsmDiscretization,
    state: PutRowState,
    height: int,
    *,
    base_cutoff: int = DEFAULT_BSM_CUTOFF,
    parallel: bool = False,
) -> PutRowState:
    """Advance a put row state ``height`` steps, tracking the boundary.

    ``state.segment`` must hold at least ``2 * height`` continuation
    values starting right above the boundary (together with the
    analytically-known exercise cells below, the input row straddles
    the boundary with ``4 * height`` known columns).  The first
    ``2 * height`` values feed the divide-and-conquer boundary
    recursion; the rest are advanced with FFT-composed linear steps
    (they sit deep enough in the continuation region to stay linear
    for ``height`` steps).  The result covers columns up to
    ``state.segment.last_col - height``, i.e. the valid cone of the
    input shrunk by one column per step.
    """
    if height < 1:
        raise GeometryError("height must be >= 1")
    width = len(state.segment)
    if width < 2 * height:
        raise GeometryError(
            f"segment holds {width} continuation values; "
            f"advancing {height} steps requires at least {2 * height}"
        )
    if base_cutoff < 1:
        raise ValidationError("base_cutoff", "base_cutoff must be >= 1")

    pool = ThreadPoolExecutor(max_workers=2) if parallel else None
    try:
        ctx = _BsmCtx(disc, base_cutoff, pool)
        new_boundary, seg = _advance_stage(
            ctx, state.time_index, state.boundary, state.segment.values, height
        )
    finally:
        if pool is not None:
            pool.shutdown(wait=True)

    return PutRowState(
        time_index=state.time_index + height,
        boundary=new_boundary,
        segment=GridRow(
            time_index=state.time_index + height,
            col_offset=new_boundary + 1,
            values=seg,
        ),
    )


def _advance_stage(
    ctx: _BsmCtx,
    time_index: int,
    boundary: int,
    seg: np.ndarray,
    height: int,
) -> tuple[int, np.ndarray]:
    """Advance boundary + far continuation values ``height`` rows."""
    f = boundary
    h = height
    far_task = None
    if seg.shape[0] > 2 * h:
        # Columns f + h + 1 .. last - h survive the cone and stay linear.
        far_task = _evolve_async(ctx, seg, h)
    kp, near = _solve_q(ctx, time_index, f, seg[: 2 * h], h)
    if far_task is not None:
        far = far_task.result()
        out = np.concatenate([near, far])
    else:
        out = near
    expected = (f + seg.shape[0] - h) - kp
    if out.shape[0] != expected:
        raise GeometryError(
            f"stage output spans {out.shape[0]} columns, expected {expected}"
        )
    return kp, out


def fast_put_bsm(
    spec: OptionSpec,
    lam: float = DEFAULT_LAMBDA,
    steps: int | None = None,
    *,
    base_cutoff: int = DEFAULT_BSM_CUTOFF,
    parallel: bool = False,
    record_rows: bool = False,
) -> PutResult:
    """Price an American put by boundary-tracking FFT recursion.

    Dispatches:

    * spot so deep in the money that the whole grid exercises
      immediately: the price is exactly ``strike - spot``;
    * step counts at most ``2 * base_cutoff``: delegates to
      :func:`baseline_put_fd` (the fast path would be pure overhead and
      this keeps the two solvers bit-identical on small problems);
    * otherwise: repeated halving stages, each advancing the tracked
      row state by ``min(remaining / 2, continuation_width / 2)`` steps,
      finishing with an explicit march once the remainder is small.

    Boundary columns are reported at stage handoff rows only (plus row
    0); ``record_rows`` additionally snapshots the continuation segment
    at each handoff.
    """
    disc = discretize_bsm(spec, lam, steps)
    n = disc.steps
    k_star = disc.k_star
    if base_cutoff < 1:
        raise ValidationError("base_cutoff", "base_cutoff must be >= 1")

    if k_star <= -n:
        series = BoundarySeries(
            times=np.zeros(1, dtype=np.int64),
            columns=np.array([min(0, k_star + n)], dtype=np.int64),
        )
        return PutResult(price=spec.strike - spec.spot, boundaries=series)

    if n <= 2 * base_cutoff:
        return baseline_put_fd(spec, lam, steps)

    pool = ThreadPoolExecutor(max_workers=2) if parallel else None
    times: list[int] = [0]
    cols: list[int] = [0]  # at the payoff row the strike node is the boundary
    snapshots: dict[int, GridRow] | None = {} if record_rows else None
    try:
        ctx = _BsmCtx(disc, base_cutoff, pool)
        start = initial_row(disc)
        m = 0
        f = start.boundary
        seg = start.segment.values
        price: float | None = None

        while True:
            rem = n - m
            red_count = seg.shape[0]
            if red_count != (k_star + rem) - f:
                raise GeometryError(
                    f"tracked segment spans {red_count} columns, "
                    f"expected {(k_star + rem) - f}"
                )
            if red_count == 0:
                # The whole remaining cone exercises immediately.
                price = spec.strike * bsm_green_value(disc, k_star)
                break
            if rem <= 2 * base_cutoff:
                price = spec.strike * _apex_finish(ctx, f, seg, rem, k_star)
                break
            h = min(rem // 2, red_count // 2)
            if h < 1:
                f, seg = _strip_advance(ctx, m, f, seg, 1)
                m += 1
            else:
                f, seg = _advance_stage(ctx, m, f, seg, h)
                m += h
            times.append(m)
            cols.append(f)
            if snapshots is not None:
                snapshots[m] = GridRow(
                    time_index=m, col_offset=f + 1, values=seg.copy()
                )
    finally:
        if pool is not None:
            pool.shutdown(wait=True)

    order = np.argsort(np.asarray(times, dtype=np.int64))
    series = BoundarySeries(
        times=np.asarray(times, dtype=np.int64)[order],
        columns=np.asarray(cols, dtype=np.int64)[order],
    )
    return PutResult(price=price, boundaries=series, rows=snapshots)


def _apex_finish(
    ctx: _BsmCtx,
    boundary: int,
    seg: np.ndarray,
    rem: int,
    k_star: int,
) -> float:
    """Explicitly march the apex cone for the final ``rem`` rows.

    ``seg`` covers columns ``boundary + 1 .. k_star + rem``.  Only the
    cone ``k_star - rem .. k_star + rem`` influences the apex, so the
    strip is clipped to it (plus one guard column used by the first
    sweep's left neighbour).
    """
    disc = ctx.disc
    f = boundary
    hi = k_star + rem
    lo = min(f, k_star - rem) - 1
    payoff = _payoff_slice(disc, lo, hi)
    arr = np.empty(hi - lo + 1, dtype=np.float64)
    if f >= lo:
        arr[: f - lo + 1] = payoff[: f - lo + 1]
        arr[f - lo + 1 :] = seg
    else:
        arr[:] = seg[lo - (f + 1) :]
    _accel.bsm_strip_sweep(
        arr,
        payoff,
        lo,
        rem,
        disc.coef_down,
        disc.coef_mid,
        disc.coef_up,
    )
    return float(arr[k_star - lo])
