"""Name -> mixer factory used by the CLI and the benchmarks."""
from __future__ import annotations

import numpy as np

from .dist_attn import distributed_attention, plan_layout
from .errors import ParameterError
from .mixers import (
    AttnParams,
    ConvParams,
    FeatureMap,
    MlpParams,
    Mixer,
    attention_mix,
    conv_mix,
    fnet_mix,
    kernel_attention_mix,
    mlp_mix,
)
from .sgconv import SgconvParams, sgconv_mix
from .ssm import SsmSystem, ssm_mix_convolutional

OPS = ("conv", "attn", "kernel-attn", "mlp", "fnet", "ssm", "sgconv", "dist-attn")


def make_mixer(op: str, L: int, D: int, *, heads: int = 1, workers: int = 1, seed: int = 0,
               kernel=None, ssm_order: int = 16, sub_kernel: int = 16) -> Mixer:
    """Build mixer ``op`` with seeded parameters bound to an L x D sequence."""
    if op == "conv":
        p = ConvParams(np.asarray(kernel, float)) if kernel is not None else ConvParams.random(min(8, L), seed)
        return Mixer(op, lambda x: conv_mix(x, p))
    if op == "attn":
        p = AttnParams.random(D, heads, seed=seed)
        return Mixer(op, lambda x: attention_mix(x, p))
    if op == "dist-attn":
        p = AttnParams.random(D, heads, seed=seed)
        return Mixer(op, lambda x: distributed_attention(x, p, plan_layout(x.shape[0], heads, workers))[0])
    if op == "kernel-attn":
        fm = FeatureMap()
        return Mixer(op, lambda x: kernel_attention_mix(x, fm))
    if op == "mlp":
        p = MlpParams.random(L, D, seed=seed)
        return Mixer(op, lambda x: mlp_mix(x, p))
    if op == "fnet":
        return Mixer(op, fnet_mix)
    if op == "ssm":
        sys = SsmSystem.hippo(ssm_order, dt=1.0 / L)
        return Mixer(op, lambda x: ssm_mix_convolutional(x, sys))
    if op == "sgconv":
        p = SgconvParams.for_length(L, min(sub_kernel, L), D, seed=seed)
        return Mixer(op, lambda x: sgconv_mix(x, p))
    raise ParameterError(f"unknown op {op!r}; valid ops: {', '.join(OPS)}")
