"""Built-in oracle suite: each identity computed two independent ways."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dist_attn import distributed_attention, plan_layout
from .mixers import (
    AttnParams,
    ConvParams,
    FeatureMap,
    MlpParams,
    attention_mix,
    attention_weights,
    conv_mix,
    fnet_mix,
    gram_form_attention,
    kernel_attention_mix,
    mlp_mix,
    mlp_mix_sequential,
)
from .sgconv import SgconvParams, build_kernel, sgconv_mix
from .ssm import SsmSystem, ssm_mix_convolutional, ssm_mix_recurrent
from .tensor import dft, naive_dft

__all__ = ["CheckResult", "CHECKS", "run_checks", "format_report"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    error: float
    tol: float
    seed: int

    @property
    def passed(self) -> bool:
        return bool(self.error <= self.tol)


def _max_abs(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def _rel(a, b) -> float:
    return _max_abs(a, b) / max(float(np.max(np.abs(b))), 1e-300)


def _fft_naive(rng, fault):
    err = 0.0
    for e in range(1, 11):
        v = rng.standard_normal(2 ** e) + 1j * rng.standard_normal(2 ** e)
        err = max(err, _rel(dft(v), naive_dft(v)))
    return err


def _dist_single(rng, fault):
    L, D, H, W = 256, 32, 4, 4
    x = rng.standard_normal((L, D))
    p = AttnParams.random(D, H, seed=int(rng.integers(2 ** 31)))
    out, _ = distributed_attention(x, p, plan_layout(L, H, W))
    return _max_abs(out, attention_mix(x, p))


def _ssm_duality(rng, fault):
    x = rng.standard_normal((256, 4))
    sys = SsmSystem.hippo(64, dt=1.0 / 256)
    return _max_abs(ssm_mix_recurrent(x, sys), ssm_mix_convolutional(x, sys))


def _gram(rng, fault):
    x = rng.standard_normal((12, 6))
    p = AttnParams.random(6, 1, seed=int(rng.integers(2 ** 31)))
    return _max_abs(gram_form_attention(x, p), attention_mix(x, p, normalize=False))


def _row_stochastic(rng, fault):
    x = rng.standard_normal((64, 8))
    p = AttnParams.random(8, 2, seed=int(rng.integers(2 ** 31)))
    a = attention_weights(x, p, head=1, _perturb_row=3 if fault == "softmax-row" else None)
    return float(np.max(np.abs(a.sum(axis=1) - 1.0)))


def _kernel_assoc(rng, fault):
    x = rng.standard_normal((32, 8))
    fm = FeatureMap()
    return _max_abs(kernel_attention_mix(x, fm, associate="right"),
                    kernel_attention_mix(x, fm, associate="left"))


def _mlp(rng, fault):
    x = rng.standard_normal((64, 32))
    p = MlpParams.random(64, 32, hidden=(48, 24), seed=int(rng.integers(2 ** 31)))
    return _max_abs(mlp_mix(x, p), mlp_mix_sequential(x, p))


def _sgconv(rng, fault):
    L, D = 128, 4
    x = rng.standard_normal((L, D))
    p = SgconvParams.for_length(L, 16, D, seed=int(rng.integers(2 ** 31)))
    kernel, _ = build_kernel(p, L)
    return _max_abs(sgconv_mix(x, p), conv_mix(x, ConvParams(kernel), method="matrix"))


def _conv(rng, fault):
    x = rng.standard_normal((64, 4))
    p = ConvParams(rng.standard_normal(8))
    return _max_abs(conv_mix(x, p, "fft"), conv_mix(x, p, "matrix"))


def _fnet_order(rng, fault):
    x = rng.standard_normal((64, 16))
    return _max_abs(fnet_mix(x, order="hidden_first"), fnet_mix(x, order="sequence_first"))


def _fnet_paths(rng, fault):
    x = rng.standard_normal((64, 16))
    return _rel(fnet_mix(x, method="fft"), fnet_mix(x, method="vandermonde"))


CHECKS: list[tuple[str, float, Callable]] = [
    ("fft == naive dft", 1e-9, _fft_naive),
    ("conv fft == banded matrix", 1e-8, _conv),
    ("attention row-stochastic", 1e-9, _row_stochastic),
    ("gram form == unnormalized attention", 1e-9, _gram),
    ("kernel attention right == left", 1e-8, _kernel_assoc),
    ("factored == sequential mlp", 1e-9, _mlp),
    ("fnet fft == vandermonde", 1e-9, _fnet_paths),
    ("fnet dft order independence", 1e-9, _fnet_order),
    ("ssm recurrent == convolutional", 1e-5, _ssm_duality),
    ("sgconv == direct conv", 1e-8, _sgconv),
    ("distributed == single-device", 1e-5, _dist_single),
]


def run_checks(seeds=(0,), fault: str | None = None) -> list[CheckResult]:
    results = []
    for seed in seeds:
        for i, (name, tol, fn) in enumerate(CHECKS):
            rng = np.random.default_rng([seed, i])
            results.append(CheckResult(name, fn(rng, fault), tol, seed))
    return results


def format_report(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [
        f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  seed={r.seed:<3d} "
        f"max_err={r.error:.3e}  tol={r.tol:.0e}"
        for r in results
    ]
    failed = sum(not r.passed for r in results)
    lines.append(f"{len(results) - failed}/{len(results)} checks passed")
    return "\n".join(lines) + "\n"
