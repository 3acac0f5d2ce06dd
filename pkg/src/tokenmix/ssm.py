"""Linear state-space mixing with HiPPO-LegS transition matrices.

Each embedding column is driven through the same single-input LTI system

    x_t = A_bar x_{t-1} + B_bar u_t,   y_t = C x_t + D u_t,   x_{-1} = 0

where (A_bar, B_bar) is the bilinear discretisation of (A, B). The same
output is available by causal convolution with the impulse response
``K_l = C A_bar^l B_bar``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.polynomial import legendre

from .errors import NumericError, ParameterError, ShapeError
from .mixers import as_seq
from .tensor import as_real, causal_convolve, check_finite

__all__ = [
    "SsmSystem",
    "SsmState",
    "hippo_legs_matrices",
    "discretize_bilinear",
    "ssm_mix_recurrent",
    "ssm_kernel",
    "ssm_mix_convolutional",
    "hippo_reconstruct",
]


def hippo_legs_matrices(order: int) -> tuple[np.ndarray, np.ndarray]:
    """HiPPO-LegS ``A`` (N x N, lower triangular) and ``B`` (N x 1)."""
    if order < 1:
        raise ParameterError(f"state order must be >= 1, got {order}")
    r = np.sqrt(2.0 * np.arange(order) + 1.0)
    a = -np.tril(np.outer(r, r), -1) - np.diag(np.arange(order) + 1.0)
    return a, r[:, None].copy()


@dataclass(frozen=True)
class SsmSystem:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d_term: float = 0.0
    dt: float = 1.0

    def __post_init__(self):
        a = as_real(self.a, "A")
        b = as_real(np.reshape(self.b, (-1, 1)), "B")
        c = as_real(np.reshape(self.c, (1, -1)), "C")
        n = a.shape[0]
        if a.shape != (n, n) or b.shape[0] != n or c.shape[1] != n:
            raise ShapeError(f"inconsistent system shapes A{a.shape} B{b.shape} C{c.shape}")
        if not self.dt > 0:
            raise ParameterError(f"step size must be positive, got {self.dt}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @classmethod
    def hippo(cls, order: int, dt: float = 1.0, c=None, d_term: float = 0.0) -> "SsmSystem":
        """LegS system with ``C`` defaulting to a row of ones."""
        a, b = hippo_legs_matrices(order)
        c = np.ones((1, order)) if c is None else c
        return cls(a, b, c, d_term, dt)

    @property
    def order(self) -> int:
        return self.a.shape[0]

    @cached_property
    def discrete(self) -> tuple[np.ndarray, np.ndarray]:
        return discretize_bilinear(self)

    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.discrete[0]))))


@dataclass
class SsmState:
    """States after ``t`` steps: one column of N coefficients per embedding column."""

    x: np.ndarray
    t: int


def _bilinear(a: np.ndarray, b: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    n = a.shape[0]
    eye = np.eye(n)
    lhs = eye - 0.5 * dt * a
    cond = np.linalg.cond(lhs)
    if not np.isfinite(cond) or cond > 1e14:
        raise NumericError(f"I - dt/2 A is singular to working precision (condition number ~{cond:.3g})")
    # LAPACK gesv: LU with partial pivoting
    sol = np.linalg.solve(lhs, np.hstack([eye + 0.5 * dt * a, dt * b]))
    return sol[:, :n], sol[:, n:]


def discretize_bilinear(sys: SsmSystem) -> tuple[np.ndarray, np.ndarray]:
    """``A_bar = (I - dt/2 A)^-1 (I + dt/2 A)``, ``B_bar = (I - dt/2 A)^-1 dt B``."""
    return _bilinear(sys.a, sys.b, sys.dt)


def ssm_mix_recurrent(x, sys: SsmSystem, timescale: str = "fixed", return_state: bool = False):
    """Run the state recursion over every column of ``x``.

    ``timescale="legs"`` replaces the fixed step by ``1/t`` at step t
    (1-based), which turns the LegS system into the scale-invariant
    projection of the whole history seen so far. That mode is not LTI, so
    it has no convolutional counterpart; it exists for reconstruction.
    """
    x = as_seq(x)
    L, D = x.shape
    if timescale not in ("fixed", "legs"):
        raise ParameterError(f"unknown timescale {timescale!r}")
    if timescale == "legs":
        steps = [_bilinear(sys.a, sys.b, 1.0 / (t + 1)) for t in range(L)]
    else:
        steps = [sys.discrete] * L
    state = np.zeros((sys.order, D))
    y = np.empty_like(x)
    c = sys.c[0]
    # one column at a time so each column's arithmetic is independent of D
    for d in range(D):
        v = np.zeros(sys.order)
        for t, (a_bar, b_bar) in enumerate(steps):
            v = a_bar @ v + b_bar[:, 0] * x[t, d]
            y[t, d] = c @ v + sys.d_term * x[t, d]
        state[:, d] = v
    check_finite(y, "ssm_mix_recurrent")
    if return_state:
        return y, SsmState(state, L)
    return y


def ssm_kernel(sys: SsmSystem, length: int) -> np.ndarray:
    """Impulse response ``K_l = C A_bar^l B_bar`` for l < length, by state propagation."""
    a_bar, b_bar = sys.discrete
    v = b_bar[:, 0].copy()
    c = sys.c[0]
    k = np.empty(length)
    for l in range(length):
        k[l] = c @ v
        v = a_bar @ v
    return check_finite(k, "ssm_kernel")


def ssm_mix_convolutional(x, sys: SsmSystem) -> np.ndarray:
    """Same output as the recursion, computed as ``K * u + D u`` with the FFT."""
    x = as_seq(x)
    k = ssm_kernel(sys, x.shape[0])
    return causal_convolve(k, x) + sys.d_term * x


def hippo_reconstruct(coeffs, t: int, window: int | None = None) -> np.ndarray:
    """Approximate history from LegS coefficients.

    The elapsed interval [0, t] is mapped onto [-1, 1] and sampled at
    ``window`` uniform points (default ``t``), oldest first; the value at
    each point is ``sum_n c_n sqrt(2n+1) P_n(s)``.
    """
    c = np.asarray(coeffs, dtype=np.float64).reshape(-1)
    n = c.shape[0]
    if window is None:
        window = t
    if window < 1:
        raise ParameterError(f"window must be >= 1, got {window}")
    s = np.linspace(-1.0, 1.0, window) if window > 1 else np.array([1.0])
    basis = legendre.legvander(s, n - 1) * np.sqrt(2.0 * np.arange(n) + 1.0)
    return basis @ c
