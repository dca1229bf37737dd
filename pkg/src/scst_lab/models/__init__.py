"""Recurrent captioners, rollouts and backpropagation through time."""

from .bptt import backprop_through_time
from .captioner import Captioner, StepState, load_model, save_model, with_config
from .rollout import (
    RolloutRecord,
    complete_greedy,
    pad_sequences,
    rollout,
    sequence_lengths,
    xe_loss_and_grad,
)
from .types import Architecture, Feedback, ModelConfig, RolloutMode

__all__ = [
    "Architecture",
    "Captioner",
    "Feedback",
    "ModelConfig",
    "RolloutMode",
    "RolloutRecord",
    "StepState",
    "backprop_through_time",
    "complete_greedy",
    "load_model",
    "pad_sequences",
    "rollout",
    "save_model",
    "sequence_lengths",
    "with_config",
    "xe_loss_and_grad",
]
