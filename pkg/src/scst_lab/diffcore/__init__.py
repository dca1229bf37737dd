"""Differentiable Numeric Core

Dense float64 tensors, the forward/backward primitives the captioners need,
a named parameter store, ADAM and the binary checkpoint codec.
"""

from .adam import AdamConfig, adam_step, annealed_lr
from .checkpoint import (
    CheckpointPayload,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from .params import ParamStore
from .tensor import Tensor, TokenArray, as_tensor, ensure_finite

__all__ = [
    "AdamConfig",
    "CheckpointPayload",
    "ParamStore",
    "Tensor",
    "TokenArray",
    "adam_step",
    "annealed_lr",
    "as_tensor",
    "decode_checkpoint",
    "encode_checkpoint",
    "ensure_finite",
    "load_checkpoint",
    "save_checkpoint",
]
