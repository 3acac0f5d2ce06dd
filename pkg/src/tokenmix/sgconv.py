"""Multi-scale global convolution with a log-sized parameter set.

``s = ceil(log2(L / k)) + 1`` sub-kernels of k x D weights are each
linearly stretched to ``k * 2**(i-1)`` rows, scaled by ``decay**(i-1)``,
concatenated and cut to L rows. The sequence is then convolved causally
with that L x D kernel using the FFT.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError
from .mixers import as_seq
from .tensor import causal_convolve

__all__ = [
    "kernel_count",
    "SgconvParams",
    "MemoryLedger",
    "interpolate_rows",
    "build_kernel",
    "sgconv_mix",
    "memory_audit",
    "audit_csv",
]


def kernel_count(L: int, k: int) -> int:
    if L < k:
        raise ParameterError(f"sequence length {L} is shorter than sub-kernel size {k}")
    e = 0
    while k << e < L:  # exact ceil(log2(L / k))
        e += 1
    return e + 1


@dataclass(frozen=True)
class SgconvParams:
    sub_weights: tuple[np.ndarray, ...]
    decay: float = 0.5

    def __post_init__(self):
        if not self.sub_weights:
            raise ParameterError("need at least one sub-kernel")
        ws = tuple(np.asarray(w, dtype=np.float64) for w in self.sub_weights)
        shape = ws[0].shape
        if len(shape) != 2 or any(w.shape != shape for w in ws):
            raise ShapeError(f"sub-kernels must share one k x D shape, got {[w.shape for w in ws]}")
        if not 0.0 < self.decay <= 1.0:
            raise ParameterError(f"decay must be in (0, 1], got {self.decay}")
        object.__setattr__(self, "sub_weights", ws)

    @property
    def k(self) -> int:
        return self.sub_weights[0].shape[0]

    @property
    def dim(self) -> int:
        return self.sub_weights[0].shape[1]

    @property
    def s(self) -> int:
        return len(self.sub_weights)

    @property
    def param_elements(self) -> int:
        return sum(w.size for w in self.sub_weights)

    @classmethod
    def for_length(cls, L: int, k: int, dim: int, seed: int = 0, decay: float = 0.5,
                   fill: float | None = None) -> "SgconvParams":
        """Parameters sized for sequences of length L; Gaussian unless ``fill`` is given."""
        s = kernel_count(L, k)
        if fill is not None:
            ws = [np.full((k, dim), float(fill)) for _ in range(s)]
        else:
            rng = np.random.default_rng(seed)
            ws = [rng.standard_normal((k, dim)) / np.sqrt(k) for _ in range(s)]
        return cls(tuple(ws), decay)


@dataclass(frozen=True)
class MemoryLedger:
    L: int
    s: int
    param_elements: int
    kernel_elements: int


def interpolate_rows(w: np.ndarray, rows: int) -> np.ndarray:
    """Linear interpolation of each column onto ``rows`` evenly spaced points (ends aligned)."""
    k = w.shape[0]
    if rows == k:
        return w.copy()
    src = np.arange(k, dtype=np.float64)
    dst = np.linspace(0.0, k - 1.0, rows)
    return np.column_stack([np.interp(dst, src, w[:, d]) for d in range(w.shape[1])])


def build_kernel(p: SgconvParams, L: int) -> tuple[np.ndarray, MemoryLedger]:
    """Instantiate the L x D kernel and account for its memory."""
    s = kernel_count(L, p.k)
    if s != p.s:
        raise ParameterError(f"length {L} with k={p.k} needs {s} sub-kernels, params hold {p.s}")
    blocks = []
    filled = 0
    for i, w in enumerate(p.sub_weights):
        if filled >= L:
            break
        blk = interpolate_rows(w, p.k * 2 ** i) * p.decay ** i
        blocks.append(blk)
        filled += blk.shape[0]
    kernel = np.concatenate(blocks, axis=0)[:L]
    if kernel.shape[0] < L:
        kernel = np.vstack([kernel, np.zeros((L - kernel.shape[0], p.dim))])
    return kernel, MemoryLedger(L, s, p.param_elements, kernel.size)


def sgconv_mix(x, p: SgconvParams) -> np.ndarray:
    """Causal per-column FFT convolution of ``x`` with its freshly built kernel."""
    x = as_seq(x)
    if x.shape[1] != p.dim:
        raise ShapeError(f"sequence dim {x.shape[1]} does not match kernel dim {p.dim}")
    kernel, _ = build_kernel(p, x.shape[0])
    return causal_convolve(kernel, x)


def memory_audit(k: int, dim: int, lengths) -> list[MemoryLedger]:
    """Parameter and kernel element counts over a sweep of lengths.

    Raises if parameters do not grow by exactly ``k * dim`` per doubling of L
    or the kernel does not hold exactly L rows.
    """
    rows = []
    for L in lengths:
        p = SgconvParams.for_length(L, k, dim, fill=1.0)
        _, ledger = build_kernel(p, L)
        if ledger.param_elements != ledger.s * k * dim:
            raise AssertionError(f"L={L}: {ledger.param_elements} params != s*k*D")
        if ledger.kernel_elements != L * dim:
            raise AssertionError(f"L={L}: kernel holds {ledger.kernel_elements} elements, expected L*D")
        rows.append(ledger)
    by_len = {r.L: r for r in rows}
    for r in rows:
        prev = by_len.get(r.L // 2)
        if r.L % 2 == 0 and prev is not None and prev.L >= k:
            if r.param_elements - prev.param_elements != k * dim:
                raise AssertionError(f"doubling {prev.L}->{r.L} added {r.param_elements - prev.param_elements} params")
    return rows


def audit_csv(rows: list[MemoryLedger]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["L", "s", "param_elements", "kernel_elements"])
    for r in rows:
        w.writerow([r.L, r.s, r.param_elements, r.kernel_elements])
    return buf.getvalue()
