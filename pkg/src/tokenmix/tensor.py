"""Dense matrix helpers and a radix-2 FFT shared by every mixer.

Matrices are plain ``numpy.ndarray`` objects in float64 / complex128.
The FFT is an iterative decimation-in-time Cooley-Tukey transform that is
vectorised over the non-transformed axis; lengths that are not a power of
two fall back to the O(n^2) Vandermonde product.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import NumericError, ShapeError

__all__ = [
    "as_real",
    "matmul",
    "dft",
    "idft",
    "naive_dft",
    "vandermonde",
    "is_pow2",
    "next_pow2",
    "circular_convolve",
    "causal_convolve",
]


def as_real(a, name: str = "matrix", ndim: int = 2) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != ndim:
        raise ShapeError(f"{name} must be {ndim}-D, got shape {arr.shape}")
    if arr.size == 0:
        raise ShapeError(f"{name} is empty (shape {arr.shape})")
    return arr


def check_finite(a: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(a)):
        raise NumericError(f"{what} produced non-finite values")
    return a


def matmul(a, b) -> np.ndarray:
    """Real matrix product with shape checking.

    Backed by BLAS, which is deterministic for fixed shapes and thread count.
    """
    a = as_real(a, "a")
    b = as_real(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}")
    return check_finite(a @ b, "matmul")


def is_pow2(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def next_pow2(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


@lru_cache(maxsize=256)
def _twiddles(size: int, sign: float) -> np.ndarray:
    # angles from integer multiples keep each twiddle accurate to ~1 ulp
    k = np.arange(size // 2)
    ang = sign * 2.0 * np.pi * k / size
    return np.cos(ang) + 1j * np.sin(ang)


_BASE = 32  # sub-transforms up to this length are done by one DFT-matrix product
_BLOCK_ELEMS = 1 << 15  # complex elements per column block (512 KiB), keeps stages in L2


def _fft_rows(x: np.ndarray, sign: float) -> np.ndarray:
    """Radix-2 decimation-in-time transform along axis 0 of a complex (n, m) array."""
    n, m = x.shape
    rows = np.ascontiguousarray(x.T)  # one column per contiguous row
    width = max(1, min(m, _BLOCK_ELEMS // n))
    out = np.empty((m, n), dtype=np.complex128)
    for c0 in range(0, m, width):
        c1 = min(m, c0 + width)
        out[c0:c1] = _fft_block(rows[c0:c1], sign)
    return out.T


def _fft_block(a: np.ndarray, sign: float) -> np.ndarray:
    """Transform each row of the contiguous (m, n) array ``a``.

    The data is kept as (m, size, count): column c of the middle two axes
    holds the length-``size`` DFT of the subsequence ``a[c::count]``. Each
    stage merges the subsequences at offsets c and c + count/2 (the even and
    odd halves of offset c at stride count/2) with one butterfly.
    """
    m, n = a.shape
    size = min(n, _BASE)
    count = n // size
    base = vandermonde(size, sign)
    cur = np.matmul(base, a.reshape(m, size, count))
    nxt = np.empty_like(cur)
    tmp = np.empty((m, size, count // 2 or 1), dtype=np.complex128)
    while count > 1:
        half = count // 2
        w = _twiddles(2 * size, sign)[:, None]
        src = cur.reshape(m, size, count)
        dst = nxt.reshape(m, 2 * size, half)
        odd = tmp.reshape(-1)[: m * size * half].reshape(m, size, half)
        np.multiply(src[:, :, half:], w, out=odd)
        np.add(src[:, :, :half], odd, out=dst[:, :size])
        np.subtract(src[:, :, :half], odd, out=dst[:, size:])
        cur, nxt = nxt, cur
        size, count = 2 * size, half
    return cur.reshape(m, n)


def vandermonde(n: int, sign: float = -1.0, rows: slice = slice(None)) -> np.ndarray:
    """Unnormalised DFT matrix ``exp(sign * 2*pi*i * j*k / n)`` (optionally a row block)."""
    jk = np.outer(np.arange(n)[rows], np.arange(n)) % n
    ang = sign * 2.0 * np.pi * jk / n
    return np.cos(ang) + 1j * np.sin(ang)


def _axis_first(v, axis: int) -> tuple[np.ndarray, bool]:
    v = np.asarray(v, dtype=np.complex128)
    if v.ndim == 1:
        v = v[:, None]
        squeeze = True
    elif v.ndim == 2:
        squeeze = False
    else:
        raise ShapeError(f"expected a vector or matrix, got shape {v.shape}")
    if v.size == 0:
        raise ShapeError(f"cannot transform an empty matrix (shape {v.shape})")
    if axis not in (0, 1):
        raise ShapeError(f"axis must be 0 (down rows) or 1 (along cols), got {axis}")
    return (v if axis == 0 else v.T), squeeze


def _restore(out: np.ndarray, axis: int, squeeze: bool) -> np.ndarray:
    out = out if axis == 0 else out.T
    return out[:, 0] if squeeze else np.ascontiguousarray(out)


def naive_dft(v, axis: int = 0, inverse: bool = False) -> np.ndarray:
    """O(n^2) transform by explicit Vandermonde multiplication."""
    x, squeeze = _axis_first(v, axis)
    n = x.shape[0]
    sign = 1.0 if inverse else -1.0
    out = np.empty_like(x)
    for r0 in range(0, n, 512):
        rows = slice(r0, min(n, r0 + 512))
        out[rows] = vandermonde(n, sign, rows) @ x
    if inverse:
        out /= n
    return _restore(out, axis, squeeze)


def dft(v, axis: int = 0, inverse: bool = False) -> np.ndarray:
    """Unnormalised forward DFT along ``axis`` (``inverse`` divides by n).

    Accepts a vector or a matrix. Power-of-two lengths take the FFT path.
    """
    x, squeeze = _axis_first(v, axis)
    n = x.shape[0]
    if not is_pow2(n):
        return naive_dft(v, axis, inverse)
    out = _fft_rows(x, 1.0 if inverse else -1.0)
    if inverse:
        out /= n
    return _restore(out, axis, squeeze)


def idft(v, axis: int = 0) -> np.ndarray:
    return dft(v, axis, inverse=True)


def circular_convolve(f, g) -> np.ndarray:
    """Circular convolution of equal-length real vectors via the FFT.

    Matrices are convolved column by column.
    """
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if f.shape != g.shape:
        raise ShapeError(f"length mismatch: {f.shape} vs {g.shape}")
    if f.size == 0:
        raise ShapeError("cannot convolve empty vectors")
    out = idft(dft(f, 0) * dft(g, 0), 0).real
    return check_finite(out, "circular_convolve")


def causal_convolve(kernel, u) -> np.ndarray:
    """Linear causal convolution ``y_t = sum_k kernel_k u_{t-k}``, truncated to len(u).

    ``kernel`` and ``u`` are vectors or column-aligned matrices; a vector
    kernel is broadcast across the columns of ``u``.
    """
    kernel = np.asarray(kernel, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    vec = u.ndim == 1
    if vec:
        u = u[:, None]
    shared = kernel.ndim == 1
    if shared:
        kernel = kernel[:, None]
    elif kernel.shape[1] != u.shape[1]:
        raise ShapeError(f"kernel has {kernel.shape[1]} columns, input has {u.shape[1]}")
    L, K = u.shape[0], kernel.shape[0]
    kernel = kernel[:L]
    n = next_pow2(L + min(K, L) - 1)
    fp = np.zeros((n, kernel.shape[1]))
    gp = np.zeros((n, u.shape[1]))
    fp[: kernel.shape[0]] = kernel
    gp[:L] = u
    # a shared kernel is transformed once and its spectrum broadcast over columns
    y = idft(dft(fp, 0) * dft(gp, 0), 0).real[:L]
    y = check_finite(np.ascontiguousarray(y), "causal_convolve")
    return y[:, 0] if vec else y
