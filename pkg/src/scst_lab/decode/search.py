"""Greedy decoding and N-best beam search with log-probability pruning."""

import logging
from collections.abc import Sequence

import numpy as np

from ..diffcore.tensor import Tensor
from ..models.captioner import Captioner
from .decoders import EnsembleDecoder, ModelDecoder, StepDecoder
from .types import BeamConfig, Hypothesis

logger = logging.getLogger(__name__)

Features = Tensor | Sequence[Tensor]


def as_decoder(model: Captioner | Sequence[Captioner]) -> StepDecoder:
    """Wrap a captioner, or a list of captioners as an ensemble."""
    if isinstance(model, Captioner):
        return ModelDecoder(model)
    return EnsembleDecoder(model)


def _batch_size(features: Features) -> int:
    if isinstance(features, np.ndarray):
        return int(features.shape[0])
    return int(features[0].shape[0])


def _example(features: Features, b: int) -> Features:
    if isinstance(features, np.ndarray):
        return features[b : b + 1]
    return [f[b : b + 1] for f in features]


def greedy_decode(
    model: Captioner | Sequence[Captioner],
    features: Features,
    max_length: int | None = None,
) -> list[Hypothesis]:
    """Argmax decode every example; ties go to the lowest token id.

    Args:
        model: A captioner, or several for posterior-averaged decoding.
        features: The model's feature view (B, ...), or one view per member.
        max_length: Length cap; defaults to the model's T.

    Returns:
        One finished hypothesis per example, in batch order.
    """
    decoder = as_decoder(model)
    T = max_length or decoder.max_length
    B = _batch_size(features)
    state = decoder.init_state(features)

    hyps = [Hypothesis(row=b) for b in range(B)]
    done = np.zeros(B, dtype=bool)
    prev = None
    for _ in range(T):
        logp, state = decoder.log_probs(state, prev)
        chosen = logp.argmax(axis=1)
        for b in np.flatnonzero(~done):
            token = int(chosen[b])
            hyps[b] = hyps[b].extend(token, float(logp[b, token]), b, token == decoder.eos_id)
        done |= chosen == decoder.eos_id
        if done.all():
            break
        prev = chosen.astype(np.int64)

    return [
        h if h.finished else Hypothesis(h.tokens, h.logprob, h.step_logprobs, True, h.row)
        for h in hyps
    ]


def prune_live(live: list[Hypothesis], margin: float) -> list[Hypothesis]:
    """Drop live hypotheses scoring strictly more than ``margin`` below the best."""
    if not live:
        return live
    best = max(h.logprob for h in live)
    return [h for h in live if best - h.logprob <= margin]


def _search_one(decoder: StepDecoder, features: Features, cfg: BeamConfig) -> list[Hypothesis]:
    T = cfg.max_length or decoder.max_length
    V = decoder.vocab_size
    state = decoder.init_state(features)
    live = [Hypothesis()]
    finished: list[Hypothesis] = []
    prev = None

    for t in range(T):
        logp, state = decoder.log_probs(state, prev)
        scores = np.array([h.logprob for h in live])[:, None] + logp
        # flat index = parent * V + token, so a stable sort orders ties by
        # parent rank, then token id
        order = np.argsort(-scores.ravel(), kind="stable")[: cfg.width]

        expanded: list[Hypothesis] = []
        last = t == T - 1
        for idx in order:
            parent, token = divmod(int(idx), V)
            is_eos = token == decoder.eos_id
            hyp = live[parent].extend(token, float(logp[parent, token]), parent, is_eos or last)
            (finished if hyp.finished else expanded).append(hyp)

        live = prune_live(expanded, cfg.prune_margin)
        if not live:
            break
        rows = np.array([h.row for h in live], dtype=np.int64)
        state = decoder.reorder(state, rows)
        prev = np.array([h.tokens[-1] for h in live], dtype=np.int64)
        live = [
            Hypothesis(h.tokens, h.logprob, h.step_logprobs, False, i)
            for i, h in enumerate(live)
        ]

    finished.sort(key=lambda h: -h.logprob)
    return finished[: cfg.width]


def beam_search(
    model: Captioner | Sequence[Captioner],
    features: Features,
    cfg: BeamConfig,
) -> list[list[Hypothesis]]:
    """N-best beam search without length normalization.

    Each step keeps the ``cfg.width`` best expansions by cumulative
    log-probability. Expansions ending in EOS finish; live hypotheses more
    than ``cfg.prune_margin`` below the best live one are discarded; at the
    length cap the remaining live hypotheses finish without EOS.

    Returns:
        Per example, at most ``cfg.width`` finished hypotheses sorted by
        descending log-probability.
    """
    decoder = as_decoder(model)
    results = []
    for b in range(_batch_size(features)):
        results.append(_search_one(decoder, _example(features, b), cfg))
    logger.debug(f"Beam search (N={cfg.width}) decoded {len(results)} examples")
    return results
