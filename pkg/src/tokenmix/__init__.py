"""Token-mixing operators, a simulated distributed attention runtime and their oracles."""

from .errors import LayoutError, NumericError, ParameterError, ProtocolError, ShapeError, TokenMixError
from .mixers import (
    TAXONOMY,
    AttnParams,
    ConvParams,
    FeatureMap,
    Mixer,
    MlpParams,
    attention_mix,
    conv_mix,
    fnet_mix,
    gram_form_attention,
    kernel_attention_mix,
    mlp_mix,
)
from .sgconv import SgconvParams, build_kernel, memory_audit, sgconv_mix
from .ssm import SsmSystem, hippo_reconstruct, ssm_kernel, ssm_mix_convolutional, ssm_mix_recurrent
from .dist_attn import distributed_attention, plan_layout
from .selector import SelectorConfig, select

__version__ = "0.1.0"
