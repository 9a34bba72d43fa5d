"""FFT primitives: transform pair, linear convolution, stencil powering.

The package's fast solvers never sweep a linear stencil row by row; they
compose ``h`` applications of a one-row kernel into a single long kernel
(:func:`kernel_power`, pointwise powering in the frequency domain) and apply
it with one convolution (:func:`apply_linear_steps`).

Conventions: :func:`fft_forward` is unnormalized, :func:`fft_inverse` divides
by the length, and both require power-of-two lengths.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TypeAlias

import numpy as np

from .model import (
    GridRow,
    InsufficientWidthError,
    NumericalIntegrityError,
    ValidationError,
)

__all__ = [
    "ComplexVec",
    "Kernel",
    "fft_forward",
    "fft_inverse",
    "convolve",
    "kernel_power",
    "apply_linear_steps",
]

#: 1-D complex128 spectrum, as produced by :func:`fft_forward`.
ComplexVec: TypeAlias = np.ndarray



@dataclass(frozen=True, slots=True)
class Kernel:
    """A one-step linear stencil with explicit column offsets.

    Applying the kernel to a row produces
    ``out[j] = sum_r weights[r] * in[j + min_offset + r]``: the kernel reads
    columns ``j + min_offset .. j + max_offset`` of the input.

    Attributes
    ----------
    weights:
        Float64 stencil weights, lowest-offset first.
    min_offset:
        Column offset of ``weights[0]`` relative to the output column.
    """

    weights: np.ndarray
    min_offset: int

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "weights", arr)
        if arr.ndim != 1 or arr.shape[0] < 1:
            raise ValidationError(
                "weights", "kernel weights must be a nonempty 1-D array"
            )

    def __len__(self) -> int:
        return int(self.weights.shape[0])

    @property
    def max_offset(self) -> int:
        """Column offset of the last weight relative to the output column."""
        return self.min_offset + len(self) - 1


def _require_pow2(n: int) -> None:
    if n < 1 or (n & (n - 1)) != 0:
        raise ValidationError(
            "length", f"fft length must be a power of two, got {n}"
        )


def fft_forward(vec: np.ndarray) -> ComplexVec:
    """Unnormalized discrete Fourier transform of a power-of-two vector.

    Parameters
    ----------
    vec:
        1-D real or complex array whose length is a power of two.

    Returns
    -------
    ComplexVec
        ``out[f] = sum_t vec[t] * exp(-2 pi i f t / N)``.

    Raises
    ------
    ValidationError
        If the length is not a power of two.

    Examples
    --------
    >>> fft_forward(np.array([1.0, 0.0, 0.0, 0.0]))
    array([1.+0.j, 1.+0.j, 1.+0.j, 1.+0.j])
    """
    arr = np.asarray(vec)
    if arr.ndim != 1:
        raise ValidationError("vec", "fft input must be 1-D")
    _require_pow2(arr.shape[0])
    return np.fft.fft(arr)


def fft_inverse(vec: np.ndarray) -> ComplexVec:
    """Inverse transform with the ``1/N`` factor; see :func:`fft_forward`.

    ``fft_inverse(fft_forward(x))`` recovers ``x`` to rounding error.
    """
    arr = np.asarray(vec)
    if arr.ndim != 1:
        raise ValidationError("vec", "fft input must be 1-D")
    _require_pow2(arr.shape[0])
    return np.fft.ifft(arr)


def _next_pow2(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


def convolve(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Full linear convolution of two 1-D arrays via the transform pair.

    The inputs are zero-padded to the next power of two at least
    ``len(x) + len(y) - 1``, transformed, multiplied pointwise, and
    inverse-transformed.  Real inputs yield a real (float64) result; if
    either input is complex the complex result is returned.

    Examples
    --------
    >>> convolve(np.array([1.0, 1.0]), np.array([1.0, 1.0]))
    array([1., 2., 1.])
    """
    ax = np.asarray(x)
    ay = np.asarray(y)
    if ax.ndim != 1 or ay.ndim != 1 or ax.shape[0] < 1 or ay.shape[0] < 1:
        raise ValidationError("x", "convolve inputs must be nonempty 1-D")
    out_len = ax.shape[0] + ay.shape[0] - 1
    n = _next_pow2(out_len)
    if not (np.iscomplexobj(x) or np.iscomplexobj(y)):
        # Real inputs: the Hermitian-symmetric half-spectrum transform is
        # the same transform pair restricted to its independent outputs,
        # at half the work and memory.
        fx = np.zeros(n)
        fy = np.zeros(n)
        fx[: ax.shape[0]] = ax
        fy[: ay.shape[0]] = ay
        prod = np.fft.irfft(np.fft.rfft(fx) * np.fft.rfft(fy), n)
        return np.ascontiguousarray(prod[:out_len])
    fx = np.zeros(n, dtype=np.complex128)
    fy = np.zeros(n, dtype=np.complex128)
    fx[: ax.shape[0]] = ax
    fy[: ay.shape[0]] = ay
    return fft_inverse(fft_forward(fx) * fft_forward(fy))[:out_len]


def _two_tap_power(weights: np.ndarray, h: int) -> np.ndarray:
    """Exact composed weights of ``h`` applications of a two-tap stencil.

    The composed weights are ``C(h, r) * a^(h-r) * b^r``; they are built
    through the successive-term ratio ``(b/a) * (h-r+1)/r`` accumulated in
    log space with extended precision, which keeps the relative error near
    rounding level for any ``h`` and never over/underflows intermediates
    the way a direct running product would.
    """
    a, b = float(weights[0]), float(weights[1])
    if a == 0.0 or b == 0.0:
        out = np.zeros(h + 1)
        if b == 0.0:
            out[0] = a**h
        else:
            out[h] = b**h
        return out
    r = np.arange(1, h + 1, dtype=np.longdouble)
    steps = np.log(
        abs(np.longdouble(b) / np.longdouble(a))
        * (np.longdouble(h) - r + 1.0)
        / r
    )
    logw = np.empty(h + 1, dtype=np.longdouble)
    logw[0] = np.longdouble(h) * np.log(abs(np.longdouble(a)))
    np.cumsum(steps, out=logw[1:])
    logw[1:] += logw[0]
    out = np.exp(logw.astype(np.float64))
    if a < 0.0 or b < 0.0:
        sa = -1.0 if a < 0.0 else 1.0
        sb = -1.0 if b < 0.0 else 1.0
        idx = np.arange(h + 1)
        out *= np.where((h - idx) % 2 == 1, sa, 1.0)
        out *= np.where(idx % 2 == 1, sb, 1.0)
    return out


def kernel_power(kernel: Kernel, h: int) -> Kernel:
    """Compose ``h`` applications of *kernel* into a single kernel.

    The composed kernel has ``h * (len(kernel) - 1) + 1`` weights and
    minimum offset ``h * kernel.min_offset``.  Generic kernels are composed
    by raising the kernel's spectrum to the ``h``-th power pointwise and
    inverting — one forward and one inverse transform regardless of ``h``;
    two-tap kernels take an exact closed form instead
    (:func:`_two_tap_power`), which is both faster and slightly more
    accurate.  Either way the result equals ``h``-fold self-convolution to
    rounding error.

    Parameters
    ----------
    kernel:
        One-step stencil.
    h:
        Number of steps, ``h >= 0``.  ``h == 0`` is the identity kernel.

    Raises
    ------
    NumericalIntegrityError
        If the composed weights are not all finite (the spectrum power
        overflowed; possible only when the weight magnitudes exceed 1).

    Examples
    --------
    >>> k = Kernel(np.array([0.5, 0.5]), 0)
    >>> kernel_power(k, 2).weights
    array([0.25, 0.5 , 0.25])
    """
    if h < 0:
        raise ValidationError("h", "step count h must be >= 0")
    if h == 0:
        return Kernel(np.array([1.0]), 0)
    if h == 1:
        return Kernel(kernel.weights.copy(), kernel.min_offset)
    if len(kernel) == 2:
        return Kernel(
            _two_tap_power(kernel.weights, h), h * kernel.min_offset
        )
    out_len = h * (len(kernel) - 1) + 1
    n = _next_pow2(out_len)
    padded = np.zeros(n)
    padded[: len(kernel)] = kernel.weights
    # Real weights give a Hermitian spectrum, and a pointwise power of a
    # Hermitian spectrum is Hermitian, so the half-spectrum transform pair
    # applies; the inverse is then real by construction (the imaginary
    # residue the full-spectrum route would need checking for is
    # structurally zero here).
    spectrum = np.fft.rfft(padded) ** h
    composed = np.fft.irfft(spectrum, n)[:out_len]
    if not np.all(np.isfinite(composed)):
        raise NumericalIntegrityError(
            f"composed kernel overflowed for h={h} "
            f"(max weight magnitude {np.max(np.abs(kernel.weights)):.3e})"
        )
    return Kernel(np.ascontiguousarray(composed), h * kernel.min_offset)


def apply_linear_steps(
    row: GridRow,
    kernel: Kernel,
    h: int,
    *,
    direction: int = 1,
    composed: Kernel | None = None,
) -> GridRow:
    """Advance *row* by ``h`` linear stencil steps in one convolution.

    Only output columns whose full dependency cone lies inside the input
    run are produced: the result covers columns
    ``[row.first_col - h * kernel.min_offset,
    row.last_col - h * kernel.max_offset]`` and its time index moves by
    ``direction * h``.

    Parameters
    ----------
    row:
        Input values.
    kernel:
        One-step stencil.
    h:
        Number of steps (``h >= 0``).
    direction:
        Sign applied to the time-index advance (+1 forward marching,
        -1 backward lattice induction); the stencil itself is unchanged.
    composed:
        Optional precomputed ``kernel_power(kernel, h)`` (cache hook).

    Raises
    ------
    InsufficientWidthError
        If the input run is too narrow to produce any output column.

    Examples
    --------
    >>> row = GridRow(5, 0, np.array([1.0, 2.0, 4.0]))
    >>> k = Kernel(np.array([0.5, 0.5]), 0)
    >>> out = apply_linear_steps(row, k, 1, direction=-1)
    >>> out.time_index, out.col_offset, out.values
    (4, 0, array([1.5, 3. ]))
    """
    if h < 0:
        raise ValidationError("h", "step count h must be >= 0")
    if h == 0:
        return GridRow(row.time_index, row.col_offset, row.values.copy())
    big = composed if composed is not None else kernel_power(kernel, h)
    expected_len = h * (len(kernel) - 1) + 1
    if composed is not None and len(big) != expected_len:
        raise ValidationError(
            "composed", "composed kernel length does not match h steps"
        )
    out_len = len(row) - len(big) + 1
    if out_len < 1:
        raise InsufficientWidthError(
            f"run of {len(row)} columns is too narrow for {h} steps of a "
            f"{len(kernel)}-point kernel (needs >= {len(big)})"
        )
    vals = convolve(row.values, big.weights[::-1])[
        len(big) - 1 : len(big) - 1 + out_len
    ]
    return GridRow(
        row.time_index + direction * h,
        row.col_offset - h * kernel.min_offset,
        np.ascontiguousarray(vals),
    )
