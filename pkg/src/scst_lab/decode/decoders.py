"""Step-wise word posteriors for single models and posterior-averaged ensembles."""

from collections.abc import Sequence
from typing import Any, Protocol

import numpy as np

from ..diffcore import ops
from ..diffcore.tensor import Tensor, TokenArray
from ..exceptions import UsageError
from ..models.captioner import Captioner, StepState


class StepDecoder(Protocol):
    """What the search routines need from a model (or a bag of models)."""

    vocab_size: int
    max_length: int
    eos_id: int

    def init_state(self, features: Tensor) -> Any: ...

    def log_probs(self, state: Any, prev_tokens: TokenArray | None) -> tuple[Tensor, Any]:
        """Return log p(w | h_t) for every batch row and the next state."""
        ...

    def reorder(self, state: Any, rows: TokenArray) -> Any: ...


class ModelDecoder:
    """Adapter exposing a single :class:`Captioner` as a :class:`StepDecoder`."""

    def __init__(self, model: Captioner) -> None:
        self.model = model
        self.vocab_size = model.cfg.vocab_size
        self.max_length = model.cfg.max_length
        self.eos_id = model.cfg.eos_id

    def init_state(self, features: Tensor) -> StepState:
        return self.model.initial_state(features)

    def log_probs(
        self, state: StepState, prev_tokens: TokenArray | None
    ) -> tuple[Tensor, StepState]:
        logits, new_state, _ = self.model.step(state, prev_tokens)
        return ops.log_softmax(logits), new_state

    def reorder(self, state: StepState, rows: TokenArray) -> StepState:
        return state.select(rows)


def average_posteriors(member_logprobs: Sequence[Tensor]) -> Tensor:
    """log of the probability-space mean of member posteriors.

    Zero probabilities are floored at the smallest positive float so scores
    stay finite.
    """
    mean = np.mean([np.exp(lp) for lp in member_logprobs], axis=0)
    return np.log(np.maximum(mean, np.finfo(np.float64).tiny))


class EnsembleDecoder:
    """Per-step arithmetic mean of member posteriors.

    Each member keeps its own decoder state; the list of states is reordered
    together during beam search. Members may differ in architecture and
    feature view, so features are given per member.

    Raises:
        UsageError: If the list is empty or members disagree on vocabulary,
            EOS id or length cap.
    """

    def __init__(self, models: Sequence[Captioner]) -> None:
        if not models:
            raise UsageError("An ensemble needs at least one model")
        first = models[0].cfg
        for m in models[1:]:
            if m.cfg.vocab_size != first.vocab_size:
                raise UsageError(
                    f"Ensemble vocabulary mismatch: {m.cfg.vocab_size} vs {first.vocab_size}"
                )
            if m.cfg.max_length != first.max_length:
                raise UsageError(
                    f"Ensemble length cap mismatch: {m.cfg.max_length} vs {first.max_length}"
                )
            if (m.cfg.bos_id, m.cfg.eos_id) != (first.bos_id, first.eos_id):
                raise UsageError("Ensemble members disagree on BOS/EOS ids")
        self.members = [ModelDecoder(m) for m in models]
        self.vocab_size = first.vocab_size
        self.max_length = first.max_length
        self.eos_id = first.eos_id

    def init_state(self, features: Sequence[Tensor]) -> list[StepState]:
        if len(features) != len(self.members):
            raise UsageError(
                f"{len(features)} feature views for {len(self.members)} ensemble members"
            )
        return [m.init_state(f) for m, f in zip(self.members, features, strict=True)]

    def log_probs(
        self, state: list[StepState], prev_tokens: TokenArray | None
    ) -> tuple[Tensor, list[StepState]]:
        outs = [m.log_probs(s, prev_tokens) for m, s in zip(self.members, state, strict=True)]
        return average_posteriors([lp for lp, _ in outs]), [s for _, s in outs]

    def reorder(self, state: list[StepState], rows: TokenArray) -> list[StepState]:
        return [s.select(rows) for s in state]


def member_features(
    models: Sequence[Captioner], global_feats: Tensor, spatial_feats: Tensor
) -> list[Tensor]:
    """The feature view each ensemble member consumes."""
    return [m.select_features(global_feats, spatial_feats) for m in models]
