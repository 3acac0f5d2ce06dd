"""Token mixers: each maps an L x D sequence to a new L x D sequence.

Every mixer here is a pure function of the sequence and an immutable
parameter object. ``TAXONOMY`` records whether an operator's weights are
learned or fixed, and whether they depend on the input tokens.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import erf

from .errors import NumericError, ParameterError, ShapeError
from .tensor import as_real, causal_convolve, check_finite, dft, is_pow2, naive_dft

__all__ = [
    "Taxonomy",
    "TAXONOMY",
    "Mixer",
    "as_seq",
    "ConvParams",
    "conv_matrix",
    "conv_mix",
    "AttnParams",
    "attend_heads",
    "attention_weights",
    "attention_mix",
    "gram_form_attention",
    "FeatureMap",
    "feature_map",
    "kernel_attention_mix",
    "MlpParams",
    "gelu",
    "mlp_mix",
    "mlp_mix_sequential",
    "fourier_2d",
    "fnet_mix",
]


@dataclass(frozen=True)
class Taxonomy:
    learned: bool
    input_dependent: bool

    def __str__(self) -> str:
        return "{}, {}".format(
            "learned" if self.learned else "fixed",
            "input-dependent" if self.input_dependent else "input-independent",
        )


TAXONOMY: dict[str, Taxonomy] = {
    "conv": Taxonomy(learned=True, input_dependent=False),
    "mlp": Taxonomy(learned=True, input_dependent=False),
    "sgconv": Taxonomy(learned=True, input_dependent=False),
    "attn": Taxonomy(learned=True, input_dependent=True),
    "dist-attn": Taxonomy(learned=True, input_dependent=True),
    "fnet": Taxonomy(learned=False, input_dependent=False),
    "kernel-attn": Taxonomy(learned=False, input_dependent=True),
    "ssm": Taxonomy(learned=False, input_dependent=True),
}


@dataclass(frozen=True)
class Mixer:
    """A bound mixing operator ``X -> X~`` with its taxonomy label."""

    name: str
    fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)

    @property
    def taxonomy(self) -> Taxonomy:
        return TAXONOMY[self.name]

    def __call__(self, x) -> np.ndarray:
        return self.fn(as_seq(x))


def as_seq(x) -> np.ndarray:
    """Validate a token sequence: a finite float64 matrix with L, D >= 1."""
    x = as_real(x, "sequence")
    return check_finite(x, "input sequence")


# --- convolution -----------------------------------------------------------


@dataclass(frozen=True)
class ConvParams:
    """Causal depthwise kernel; ``weights`` is (K,) shared or (K, D) per column."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim not in (1, 2) or w.shape[0] == 0:
            raise ParameterError(f"conv weights must be (K,) or (K, D), got {w.shape}")
        object.__setattr__(self, "weights", w)

    @property
    def window(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def random(cls, window: int, seed: int = 0) -> "ConvParams":
        rng = np.random.default_rng(seed)
        return cls(rng.standard_normal(window) / np.sqrt(window))


def conv_matrix(w, L: int) -> np.ndarray:
    """Lower-triangular banded L x L matrix with ``w_k`` on the k-th subdiagonal."""
    w = np.asarray(w, dtype=np.float64)
    m = np.zeros((L, L))
    for k in range(min(len(w), L)):
        idx = np.arange(k, L)
        m[idx, idx - k] = w[k]
    return m


_DIRECT_WINDOW = 32  # "auto" sums shifted copies up to this window, then switches to the FFT


def conv_mix(x, p: ConvParams, method: str = "auto") -> np.ndarray:
    """``Y_t = sum_k w_k X_{t-k}`` per column, with zeros before the first token.

    ``method`` is ``"fft"``, ``"matrix"`` (explicit banded matrix) or
    ``"auto"``, which sums K shifted copies for short windows (exact for
    0/1 weights) and uses the FFT otherwise.
    """
    x = as_seq(x)
    L, D = x.shape
    if p.window > L:
        raise ParameterError(f"kernel window {p.window} exceeds sequence length {L}")
    w = p.weights
    if w.ndim == 2 and w.shape[1] != D:
        raise ShapeError(f"per-column kernel has {w.shape[1]} columns, sequence has {D}")
    if method == "auto":
        method = "direct" if p.window <= _DIRECT_WINDOW else "fft"
    if method == "direct":
        wk = w if w.ndim == 2 else w[:, None]
        y = x * wk[0]
        for k in range(1, p.window):
            y[k:] += x[:-k] * wk[k]
        return y
    if method == "fft":
        return causal_convolve(w, x)
    if method == "matrix":
        if w.ndim == 1:
            return conv_matrix(w, L) @ x
        return np.column_stack([conv_matrix(w[:, d], L) @ x[:, d] for d in range(D)])
    raise ParameterError(f"unknown conv method {method!r}")


# --- attention -------------------------------------------------------------


@dataclass(frozen=True)
class AttnParams:
    """Projection weights for (multi-head) self-attention.

    ``w_q``, ``w_k``, ``w_v`` are D x M with M = heads * head_dim. ``w_o``
    (M x D) is optional and applied to the concatenated head outputs.
    """

    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray
    heads: int = 1
    w_o: np.ndarray | None = None

    def __post_init__(self):
        for name in ("w_q", "w_k", "w_v"):
            object.__setattr__(self, name, as_real(getattr(self, name), name))
        if not (self.w_q.shape == self.w_k.shape == self.w_v.shape):
            raise ShapeError(
                f"projection shapes differ: {self.w_q.shape}, {self.w_k.shape}, {self.w_v.shape}"
            )
        D, M = self.w_q.shape
        if self.heads < 1 or M % self.heads:
            raise ParameterError(f"projection width {M} not divisible by {self.heads} heads")
        if self.w_o is not None:
            w_o = as_real(self.w_o, "w_o")
            if w_o.shape[0] != M:
                raise ShapeError(f"w_o has {w_o.shape[0]} rows, expected {M}")
            object.__setattr__(self, "w_o", w_o)

    @property
    def dim(self) -> int:
        return self.w_q.shape[0]

    @property
    def width(self) -> int:
        return self.w_q.shape[1]

    @property
    def head_dim(self) -> int:
        return self.width // self.heads

    @classmethod
    def random(cls, dim: int, heads: int = 1, head_dim: int | None = None, seed: int = 0,
               out_proj: bool | None = None) -> "AttnParams":
        """Gaussian weights scaled by 1/sqrt(fan_in); ``w_o`` defaults on for heads > 1."""
        head_dim = head_dim or max(1, dim // heads)
        M = heads * head_dim
        rng = np.random.default_rng(seed)
        scale = 1.0 / np.sqrt(dim)
        w_q, w_k, w_v = (rng.standard_normal((dim, M)) * scale for _ in range(3))
        if out_proj is None:
            out_proj = heads > 1
        w_o = rng.standard_normal((M, dim)) / np.sqrt(M) if out_proj else None
        return cls(w_q, w_k, w_v, heads, w_o)


def split_heads(a: np.ndarray, heads: int) -> np.ndarray:
    """(L, H*d) -> (H, L, d)."""
    L, M = a.shape
    return np.ascontiguousarray(a.reshape(L, heads, M // heads).transpose(1, 0, 2))


def merge_heads(a: np.ndarray) -> np.ndarray:
    """(H, L, d) -> (L, H*d)."""
    H, L, d = a.shape
    return a.transpose(1, 0, 2).reshape(L, H * d)


def softmax_rows(scores: np.ndarray, head_offset: int = 0) -> np.ndarray:
    """Row softmax over the last axis, in place, stabilised by the row max."""
    row_max = scores.max(axis=-1, keepdims=True)
    if not np.all(np.isfinite(row_max)):
        h, t = np.argwhere(~np.isfinite(row_max.reshape(-1, scores.shape[-2])))[0]
        raise NumericError(f"non-finite attention scores in row {t} of head {h + head_offset}")
    scores -= row_max
    np.exp(scores, out=scores)
    scores /= scores.sum(axis=-1, keepdims=True)
    return scores


def attend_heads(q: np.ndarray, k: np.ndarray, v: np.ndarray, normalize: bool = True,
                 head_offset: int = 0) -> np.ndarray:
    """Per-head ``softmax(Q K^T) V`` on (h, L, d) stacks; returns (h, L, d).

    All h score matrices are materialised together (h * L^2 elements).
    """
    with np.errstate(over="ignore", invalid="ignore"):  # reported per row by softmax_rows
        scores = np.matmul(q, k.transpose(0, 2, 1))
    if normalize:
        softmax_rows(scores.reshape(-1, *scores.shape[-2:]), head_offset)
    return np.matmul(scores, v)


def _project(x: np.ndarray, p: AttnParams):
    if x.shape[1] != p.dim:
        raise ShapeError(f"sequence dim {x.shape[1]} does not match projections ({p.dim})")
    return x @ p.w_q, x @ p.w_k, x @ p.w_v


def attention_weights(x, p: AttnParams, head: int = 0, _perturb_row: int | None = None) -> np.ndarray:
    """The L x L softmax weight matrix of one head.

    ``_perturb_row`` is a fault-injection hook for the verify suite.
    """
    x = as_seq(x)
    q, k, _ = _project(x, p)
    d = p.head_dim
    s = q[:, head * d:(head + 1) * d] @ k[:, head * d:(head + 1) * d].T
    a = softmax_rows(s[None], head)[0]
    if _perturb_row is not None:
        a[_perturb_row] *= 1.01
    return a


def attention_mix(x, p: AttnParams, normalize: bool = True) -> np.ndarray:
    """Self-attention without masking or 1/sqrt(d) scaling.

    ``normalize=False`` keeps the raw scores, giving ``(Q K^T) V``.
    """
    x = as_seq(x)
    q, k, v = _project(x, p)
    H = p.heads
    out = merge_heads(attend_heads(split_heads(q, H), split_heads(k, H), split_heads(v, H), normalize))
    if p.w_o is not None:
        out = out @ p.w_o
    return check_finite(out, "attention_mix")


def gram_form_attention(x, p: AttnParams) -> np.ndarray:
    """Unnormalised single-head attention as ``[X G X^T] X W_V`` with ``G = W_Q W_K^T``."""
    if p.heads != 1:
        raise ParameterError("the Gram-matrix form is defined for a single head")
    x = as_seq(x)
    if x.shape[1] != p.dim:
        raise ShapeError(f"sequence dim {x.shape[1]} does not match projections ({p.dim})")
    gram = p.w_q @ p.w_k.T
    out = ((x @ gram) @ x.T) @ (x @ p.w_v)
    if p.w_o is not None:
        out = out @ p.w_o
    return check_finite(out, "gram_form_attention")


# --- kernelised attention --------------------------------------------------


@dataclass(frozen=True)
class FeatureMap:
    """Positive feature map for kernel attention.

    ``elu_plus_one``: phi(x) = elu(x) + 1 elementwise (R = D).
    ``random``: phi(x) = exp(x w - |x|^2 / 2) / sqrt(R) with w ~ N(0, 1)^{D x R}.
    """

    kind: str = "elu_plus_one"
    features: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("elu_plus_one", "random"):
            raise ParameterError(f"unknown feature map {self.kind!r}")


def feature_map(fm: FeatureMap, x: np.ndarray) -> np.ndarray:
    if fm.kind == "elu_plus_one":
        phi = np.where(x > 0, x + 1.0, np.exp(np.minimum(x, 0.0)))
    else:
        omega = np.random.default_rng(fm.seed).standard_normal((x.shape[1], fm.features))
        sq = 0.5 * np.sum(x * x, axis=1, keepdims=True)
        with np.errstate(over="ignore"):
            phi = np.exp(x @ omega - sq) / np.sqrt(fm.features)
    return check_finite(phi, f"feature map {fm.kind}")


def kernel_attention_mix(x, fm: FeatureMap = FeatureMap(), normalize: bool = True,
                         associate: str = "right") -> np.ndarray:
    """``phi(X) phi(X)^T X``, optionally divided row-wise by ``phi(X) phi(X)^T 1``.

    ``associate="right"`` evaluates ``phi (phi^T X)`` in O(L R D);
    ``"left"`` forms the L x L kernel matrix first.
    """
    x = as_seq(x)
    phi = feature_map(fm, x)
    if associate == "right":
        out = phi @ (phi.T @ x)
        den = phi @ phi.sum(axis=0) if normalize else None
    elif associate == "left":
        kern = phi @ phi.T
        out = kern @ x
        den = kern.sum(axis=1) if normalize else None
    else:
        raise ParameterError(f"associate must be 'right' or 'left', got {associate!r}")
    if normalize:
        if not np.all(den > 0):
            row = int(np.argmin(den > 0))
            raise NumericError(f"kernel attention: feature map vanished on row {row} (zero normaliser)")
        out = out / den[:, None]
    return check_finite(out, "kernel_attention_mix")


# --- MLP mixing ------------------------------------------------------------


def gelu(a: np.ndarray) -> np.ndarray:
    return 0.5 * a * (1.0 + erf(a / np.sqrt(2.0)))


@dataclass(frozen=True)
class MlpParams:
    """Token-mixing ``token`` (L x L) and channel-mixing ``channel`` (D x D) weights.

    Built from factors with :meth:`from_factors`, the two-layer MLPs are
    kept so that ``nonlinearity="gelu"`` can be applied between them.
    """

    token: np.ndarray
    channel: np.ndarray
    nonlinearity: str = "none"
    factors: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray] | None = None

    def __post_init__(self):
        if self.nonlinearity not in ("none", "gelu"):
            raise ParameterError(f"unknown nonlinearity {self.nonlinearity!r}")
        if self.nonlinearity == "gelu" and self.factors is None:
            raise ParameterError("gelu mixing needs the factored weights (use from_factors)")
        token = as_real(self.token, "token weights")
        channel = as_real(self.channel, "channel weights")
        if token.shape[0] != token.shape[1] or channel.shape[0] != channel.shape[1]:
            raise ShapeError(f"mixing weights must be square, got {token.shape} and {channel.shape}")
        object.__setattr__(self, "token", token)
        object.__setattr__(self, "channel", channel)

    @classmethod
    def from_factors(cls, p1, p2, c1, c2, nonlinearity: str = "none") -> "MlpParams":
        """``p1``: Lh x L, ``p2``: L x Lh, ``c1``: D x Dh, ``c2``: Dh x D."""
        p1, p2, c1, c2 = (as_real(a) for a in (p1, p2, c1, c2))
        if p2.shape[1] != p1.shape[0] or c1.shape[1] != c2.shape[0]:
            raise ShapeError(f"factor shapes do not chain: {p1.shape}, {p2.shape}, {c1.shape}, {c2.shape}")
        return cls(p2 @ p1, c1 @ c2, nonlinearity, (p1, p2, c1, c2))

    @classmethod
    def random(cls, L: int, D: int, hidden: tuple[int, int] | None = None, seed: int = 0,
               nonlinearity: str = "none") -> "MlpParams":
        lh, dh = hidden or (L, D)
        rng = np.random.default_rng(seed)
        p1 = rng.standard_normal((lh, L)) / np.sqrt(L)
        p2 = rng.standard_normal((L, lh)) / np.sqrt(lh)
        c1 = rng.standard_normal((D, dh)) / np.sqrt(D)
        c2 = rng.standard_normal((dh, D)) / np.sqrt(dh)
        return cls.from_factors(p1, p2, c1, c2, nonlinearity)


def _check_bound(x: np.ndarray, p: MlpParams):
    L, D = x.shape
    if p.token.shape[0] != L or p.channel.shape[0] != D:
        raise ShapeError(
            f"mlp weights bound to ({p.token.shape[0]}, {p.channel.shape[0]}), sequence is ({L}, {D})"
        )


def mlp_mix(x, p: MlpParams) -> np.ndarray:
    """``W_p X W_c`` (linear) or the two GELU MLPs applied in sequence."""
    x = as_seq(x)
    _check_bound(x, p)
    if p.nonlinearity == "none":
        return (p.token @ x) @ p.channel
    p1, p2, c1, c2 = p.factors
    xt = p2 @ gelu(p1 @ x)
    return gelu(xt @ c1) @ c2


def mlp_mix_sequential(x, p: MlpParams) -> np.ndarray:
    """Linear token mixing column by column, then channel mixing row by row."""
    x = as_seq(x)
    _check_bound(x, p)
    if p.factors is None:
        raise ParameterError("sequential mixing needs the factored weights")
    p1, p2, c1, c2 = p.factors
    L, D = x.shape
    xt = np.empty_like(x)
    for d in range(D):
        xt[:, d] = p2 @ (p1 @ x[:, d])
    z = np.empty_like(x)
    for t in range(L):
        z[t] = (xt[t] @ c1) @ c2
    return z


# --- Fourier mixing --------------------------------------------------------


def fourier_2d(x, method: str = "fft", order: str = "hidden_first", normalized: bool = True) -> np.ndarray:
    """Complex ``F_s X F_h``: a DFT over the hidden axis and one over the sequence axis.

    ``method="vandermonde"`` multiplies by the explicit DFT matrices.
    """
    x = np.asarray(x)
    x = x.astype(np.complex128 if np.iscomplexobj(x) else np.float64, copy=False)
    L, D = x.shape
    if method == "vandermonde":
        # F_h is symmetric, so X F_h is the row-wise transform
        if order == "hidden_first":
            z = naive_dft(naive_dft(x, 1), 0)
        else:
            z = naive_dft(naive_dft(x, 0), 1)
    elif method == "fft":
        if order == "hidden_first":
            z = dft(dft(x, 1), 0)
        else:
            z = dft(dft(x, 0), 1)
    else:
        raise ParameterError(f"unknown fourier method {method!r}")
    if normalized:
        z = z / np.sqrt(L * D)
    return z


def fnet_mix(x, method: str = "auto", order: str = "hidden_first") -> np.ndarray:
    """``Re{F_s X F_h}`` with DFT matrices normalised by 1/sqrt(L) and 1/sqrt(D)."""
    x = as_seq(x)
    if order not in ("hidden_first", "sequence_first"):
        raise ParameterError(f"unknown transform order {order!r}")
    if method == "auto":
        method = "fft" if is_pow2(x.shape[0]) and is_pow2(x.shape[1]) else "vandermonde"
    return np.ascontiguousarray(fourier_2d(x, method, order).real)
