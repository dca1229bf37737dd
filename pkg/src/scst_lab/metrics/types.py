"""
Type definitions for captioning metrics.
"""

from collections.abc import Hashable, Sequence
from enum import Enum

from pydantic import BaseModel, Field

Sentence = Sequence[Hashable]
NGram = tuple[Hashable, ...]


class MetricKind(str, Enum):
    """Metric (and reward) names as used on the command line."""

    CIDER = "cider"
    BLEU = "bleu"
    ROUGE = "rouge"


class MetricScore(BaseModel):
    """Sentence-level scores and the corpus score of one metric."""

    kind: MetricKind
    sentence_scores: list[float] = Field(default_factory=list)
    corpus_score: float = 0.0
