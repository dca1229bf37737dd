"""Sentence-level rewards and whole-corpus evaluation."""

import logging
from collections.abc import Callable, Sequence

import numpy as np

from ..config.settings import Settings
from ..diffcore.tensor import Tensor
from ..exceptions import UsageError
from .bleu import bleu4, sentence_bleu
from .cider import cider_d, cider_d_sentence
from .ngrams import NGramStats, tokenize_for_reward
from .rouge import rouge_l, sentence_rouge_l
from .types import MetricKind, MetricScore, Sentence

logger = logging.getLogger(__name__)

RewardFn = Callable[[list[list[int]]], Tensor]


def parse_kind(kind: str | MetricKind) -> MetricKind:
    """Resolve a metric name; unknown names raise UsageError."""
    try:
        return MetricKind(kind)
    except ValueError:
        valid = ", ".join(k.value for k in MetricKind)
        raise UsageError(f"Unknown reward kind {kind!r} (expected one of {valid})") from None


def reward_fn(
    kind: str | MetricKind,
    candidates: Sequence[Sentence],
    references: Sequence[Sequence[Sentence]],
    stats: NGramStats | None = None,
) -> Tensor:
    """Sentence-level metric of each candidate against its own references.

    Raises:
        UsageError: On an unknown kind, or CIDEr-D without n-gram statistics.
    """
    metric = parse_kind(kind)
    if len(candidates) != len(references):
        raise UsageError(f"{len(candidates)} candidates for {len(references)} reference sets")
    pairs = zip(candidates, references, strict=True)
    if metric is MetricKind.CIDER:
        if stats is None:
            raise UsageError("CIDEr-D rewards need n-gram statistics")
        scores = [cider_d_sentence(c, refs, stats) for c, refs in pairs]
    elif metric is MetricKind.BLEU:
        scores = [sentence_bleu(c, refs) for c, refs in pairs]
    else:
        scores = [sentence_rouge_l(c, refs) for c, refs in pairs]
    return np.asarray(scores, dtype=np.float64)


class RewardScorer:
    """Rewards for one dataset split with frozen n-gram statistics.

    References are stored tokenized the same way candidates are, so with
    ``include_eos`` both sides carry the EOS word.

    Args:
        kind: Reward metric.
        references: Per-example reference token lists (each ending in EOS).
        stats: Document frequencies, normally from the training references.
        eos_id: End-of-sentence token.
        include_eos: Score EOS as a word.
    """

    def __init__(
        self,
        kind: str | MetricKind,
        references: Sequence[Sequence[Sequence[int]]],
        stats: NGramStats,
        eos_id: int,
        include_eos: bool = True,
    ) -> None:
        self.kind = parse_kind(kind)
        self.stats = stats
        self.eos_id = eos_id
        self.include_eos = include_eos
        self.references = [
            [tokenize_for_reward(r, eos_id, include_eos) for r in refs] for refs in references
        ]

    def tokenize(self, sequence: Sequence[int]) -> list[int]:
        return tokenize_for_reward(sequence, self.eos_id, self.include_eos)

    def score(self, sequences: Sequence[Sequence[int]], indices: Sequence[int]) -> Tensor:
        """Rewards of ``sequences[k]`` against the references of ``indices[k]``."""
        cands = [self.tokenize(s) for s in sequences]
        refs = [self.references[i] for i in indices]
        return reward_fn(self.kind, cands, refs, self.stats)

    def bind(self, indices: Sequence[int]) -> RewardFn:
        """A reward callable for one minibatch of examples."""
        fixed = list(indices)

        def _reward(sequences: list[list[int]]) -> Tensor:
            return self.score(sequences, fixed)

        return _reward


def evaluate_corpus(
    candidates: Sequence[Sentence],
    references: Sequence[Sequence[Sentence]],
    stats: NGramStats,
    sigma: float = Settings.CIDER_SIGMA,
) -> dict[MetricKind, MetricScore]:
    """CIDEr-D, BLEU-4 and ROUGE-L of one candidate set."""
    scores = {
        MetricKind.CIDER: cider_d(candidates, references, stats, sigma),
        MetricKind.BLEU: bleu4(candidates, references),
        MetricKind.ROUGE: rouge_l(candidates, references),
    }
    logger.debug(
        "Corpus scores: "
        + ", ".join(f"{k.value}={v.corpus_score:.4f}" for k, v in scores.items())
    )
    return scores
