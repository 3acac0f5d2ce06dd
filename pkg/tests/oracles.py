"""Brute-force reference computations, written without the package's code paths."""
import cmath
import math

import numpy as np


def matmul_loops(a, b):
    n, k = len(a), len(a[0])
    m = len(b[0])
    out = [[0.0] * m for _ in range(n)]
    for i in range(n):
        for j in range(m):
            s = 0.0
            for t in range(k):
                s += a[i][t] * b[t][j]
            out[i][j] = s
    return np.array(out)


def dft_sum(v):
    n = len(v)
    return np.array([sum(v[j] * cmath.exp(-2j * math.pi * j * k / n) for j in range(n)) for k in range(n)])


def circular_conv_sum(f, g):
    n = len(f)
    return np.array([sum(f[j] * g[(t - j) % n] for j in range(n)) for t in range(n)])


def causal_conv_sum(w, u):
    """y_t = sum_{k<=t} w_k u_{t-k}, per column; ``w`` is (K,) or (K, D)."""
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    L, D = u.shape
    if w.ndim == 1:
        w = np.repeat(w[:, None], D, axis=1)
    y = np.zeros((L, D))
    for d in range(D):
        for t in range(L):
            s = 0.0
            for k in range(min(len(w), t + 1)):
                s += w[k, d] * u[t - k, d]
            y[t, d] = s
    return y


def attention_three_step(x, w_q, w_k, w_v, heads, w_o=None):
    """Scores, softmax and weighted sum evaluated element by element, head by head."""
    L = x.shape[0]
    q, k, v = x @ w_q, x @ w_k, x @ w_v
    d = q.shape[1] // heads
    out = np.zeros((L, heads * d))
    for h in range(heads):
        sl = slice(h * d, (h + 1) * d)
        for t in range(L):
            scores = [float(np.dot(q[t, sl], k[j, sl])) for j in range(L)]
            m = max(scores)
            e = [math.exp(s - m) for s in scores]
            z = sum(e)
            for j in range(L):
                out[t, sl] += (e[j] / z) * v[j, sl]
    return out @ w_o if w_o is not None else out


def bilinear_inverse(a, b, dt):
    n = a.shape[0]
    inv = np.linalg.inv(np.eye(n) - dt / 2 * a)
    return inv @ (np.eye(n) + dt / 2 * a), inv @ (dt * b)


def matrix_power_squaring(a, e):
    result = np.eye(a.shape[0])
    base = a.copy()
    while e:
        if e & 1:
            result = result @ base
        base = base @ base
        e >>= 1
    return result
