"""Compiled inner loops (numba) with pure-Python fallbacks.

Every kernel here is single-threaded and uses a fixed arithmetic order, so
results are bit-reproducible run to run.  When numba is unavailable the
fallbacks produce the same values (same expressions, same evaluation order),
only slower; ``HAS_NUMBA`` reports which path is active.

Grid conventions shared by the kernels:

* Binomial call lattice: row ``i`` has columns ``0..i``; a cell is red
  (continuation) iff ``lin >= green`` (ties red) and its value is then
  ``wd * v[j] + wu * v[j + 1]``, otherwise green with value
  ``spot * exp((2 j - i) * log_up) - strike``.
* BSM put grid: marching forward in ``n``; a cell is green (exercise) iff
  ``payoff >= lin`` (ties green) and its value is then the payoff
  ``1 - exp(k * d_s)``, otherwise red with value
  ``cm * v[k] + cu * v[k + 1] + cd * v[k - 1]``.
"""

from __future__ import annotations

import math

import numpy as np

try:  # pragma: no cover - exercised implicitly by whichever path runs
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    HAS_NUMBA = False

    def njit(*args, **kwargs):  # type: ignore[misc]
        """No-op decorator standing in for numba.njit."""
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


#: "No exercise column seen" marker used inside kernels (distinct from any
#: real column index; callers translate it to the public sentinel).
NONE_SEEN = -(1 << 60)


@njit(cache=True)
def european_backward(values: np.ndarray, wd: float, wu: float) -> float:
    """Full backward induction of a leaf row with no exercise decisions.

    ``values`` (length T + 1) is consumed in place; returns the root value.
    """
    n = values.shape[0] - 1
    for i in range(n, 0, -1):
        for j in range(i):
            values[j] = wd * values[j] + wu * values[j + 1]
    return values[0]


@njit(cache=True)
def american_call_backward(
    values: np.ndarray,
    u2: np.ndarray,
    first_green: np.ndarray,
    spot: float,
    strike: float,
    wd: float,
    wu: float,
    log_up: float,
) -> float:
    """Full projected backward induction for the American call.

    ``values`` initially holds the leaf row (length T + 1) and is consumed
    in place.  ``u2[j] = exp((2 j - T) * log_up)`` is precomputed so the
    exercise value at ``(i, j)`` is ``spot * exp((T - i) * log_up) * u2[j]
    - strike`` without a per-cell ``exp``.  ``first_green`` (length T + 1)
    receives the first exercise column of every row, or ``NONE_SEEN`` when
    the row has none.
    """
    n = values.shape[0] - 1
    fg = NONE_SEEN
    for j in range(n + 1):
        if spot * u2[j] - strike > 0.0:
            fg = j
            break
    first_green[n] = fg
    for i in range(n - 1, -1, -1):
        row_scale = spot * math.exp((n - i) * log_up)
        fg = NONE_SEEN
        for j in range(i + 1):
            lin = wd * values[j] + wu * values[j + 1]
            grn = row_scale * u2[j] - strike
            if lin >= grn:
                values[j] = lin
            else:
                values[j] = grn
                if fg == NONE_SEEN:
                    fg = j
        first_green[i] = fg
    return values[0]


@njit(cache=True)
def binomial_strip_sweep(
    values: np.ndarray,
    e2: np.ndarray,
    lo: int,
    top_row: int,
    boundary: int,
    height: int,
    spot: float,
    strike: float,
    wd: float,
    wu: float,
    log_up: float,
) -> int:
    """Explicit projected sweeps on a narrow column strip near the boundary.

    On entry ``values[c - lo]`` holds the continuation value of column ``c``
    of row ``top_row`` for ``c`` in ``[lo, boundary]``; columns above the
    row's boundary are exercise cells and are read analytically.
    ``e2[idx] = exp(2 * idx * log_up)`` must cover ``idx`` up to
    ``len(values)`` so the exercise value at ``(r, c)`` is
    ``spot * exp((2 lo - r) * log_up) * e2[c - lo] - strike`` with one
    scalar ``exp`` per row.  Performs ``height`` one-row sweeps toward the
    root, updating ``values`` in place; afterwards ``values[c - lo]`` is
    valid for ``c`` in ``[lo, returned boundary]``.

    Returns the last-continuation-column boundary of row
    ``top_row - height`` (``lo - 1`` when every strip column went to
    exercise, possible only on the final sweep, or at any point when
    ``lo == 0``, where it means the remaining rows are entirely exercise).
    """
    j = boundary
    for step in range(height):
        parent = top_row - step
        child = parent - 1
        if j < lo:
            break
        top = j if j < child else child
        base_child = spot * math.exp((2 * lo - child) * log_up)
        base_parent = spot * math.exp((2 * lo - parent) * log_up)
        fg = NONE_SEEN
        for c in range(lo, top + 1):
            if c + 1 <= j:
                vr = values[c + 1 - lo]
            else:
                vr = base_parent * e2[c + 1 - lo] - strike
            lin = wd * values[c - lo] + wu * vr
            grn = base_child * e2[c - lo] - strike
            if lin >= grn:
                values[c - lo] = lin
            else:
                values[c - lo] = grn
                if fg == NONE_SEEN:
                    fg = c
        j = top if fg == NONE_SEEN else fg - 1
    return j


@njit(cache=True)
def put_march_window(
    values: np.ndarray,
    payoff: np.ndarray,
    start_step: int,
    end_step: int,
    cd: float,
    cm: float,
    cu: float,
    last_green: np.ndarray,
) -> float:
    """Projected explicit marching on the full shrinking window.

    ``values`` and ``payoff`` cover 2 T + 1 columns of the initial row;
    after global step ``n`` only array offsets ``n .. 2 T - n`` are valid
    (the dependency cone of the apex).  Marches steps ``start_step + 1``
    through ``end_step`` (callers may march in chunks to snapshot
    intermediate rows).  ``last_green[n]`` receives the largest
    exercise-cell offset within the valid window after step ``n``, or
    ``NONE_SEEN`` when the window contains no exercise cell (the true
    boundary then lies below the window).  Returns the apex entry.
    """
    two_t = values.shape[0] - 1
    for n in range(start_step + 1, end_step + 1):
        left = values[n - 1]
        lg = NONE_SEEN
        for k in range(n, two_t - n + 1):
            cur = values[k]
            lin = cm * cur + cu * values[k + 1] + cd * left
            left = cur
            pay = payoff[k]
            if lin > pay:
                values[k] = lin
            else:
                values[k] = pay
                lg = k
        last_green[n] = lg
    return values[two_t // 2]


@njit(cache=True)
def bsm_strip_sweep(
    values: np.ndarray,
    payoff: np.ndarray,
    lo: int,
    height: int,
    cd: float,
    cm: float,
    cu: float,
) -> int:
    """Explicit projected sweeps on a column strip straddling the boundary.

    ``values[k - lo]`` holds row-``n`` values for columns ``k`` in
    ``[lo, hi]`` (``hi = lo + len - 1``): payoff values at and below the
    row's boundary, continuation values above it.  ``payoff`` covers the
    same columns.  Performs ``height`` forward marching steps; the valid
    range shrinks by one column per side per step, so afterwards entries
    for ``[lo + height, hi - height]`` are valid.

    Returns the largest exercise column of row ``n + height`` seen within
    the final valid range, or ``NONE_SEEN`` when that range contains no
    exercise cell (callers size the strip so the boundary stays visible
    whenever they rely on it).
    """
    hi = lo + values.shape[0] - 1
    lg = NONE_SEEN
    for step in range(1, height + 1):
        left = values[step - 1]
        lg = NONE_SEEN
        for k in range(lo + step, hi - step + 1):
            cur = values[k - lo]
            lin = cm * cur + cu * values[k - lo + 1] + cd * left
            left = cur
            pay = payoff[k - lo]
            if lin > pay:
                values[k - lo] = lin
            else:
                values[k - lo] = pay
                lg = k
    return lg
