"""Greedy, beam and ensemble decoding."""

from .decoders import (
    EnsembleDecoder,
    ModelDecoder,
    StepDecoder,
    average_posteriors,
    member_features,
)
from .ensemble import ensemble_decode
from .search import as_decoder, beam_search, greedy_decode, prune_live
from .types import BeamConfig, Hypothesis

__all__ = [
    "BeamConfig",
    "EnsembleDecoder",
    "Hypothesis",
    "ModelDecoder",
    "StepDecoder",
    "as_decoder",
    "average_posteriors",
    "beam_search",
    "ensemble_decode",
    "greedy_decode",
    "member_features",
    "prune_live",
]
