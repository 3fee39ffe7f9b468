"""Model architecture."""

from .config import ABLATIONS, NORMS, TASKS, ConfigError, ModelConfig
from .layers import (
    CrossAttention,
    DynamicTanh,
    FingerprintMlp,
    GatLayer,
    GruCell,
    LayerNorm,
    Linear,
    MixedInformation,
    SupernodeReadout,
    TransformerLayer,
    segment_softmax,
)
from .network import EmptyMoleculeError, MlfgnnModel

__all__ = [
    "ABLATIONS",
    "ConfigError",
    "CrossAttention",
    "DynamicTanh",
    "EmptyMoleculeError",
    "FingerprintMlp",
    "GatLayer",
    "GruCell",
    "LayerNorm",
    "Linear",
    "MixedInformation",
    "MlfgnnModel",
    "ModelConfig",
    "NORMS",
    "SupernodeReadout",
    "TASKS",
    "TransformerLayer",
    "segment_softmax",
]
