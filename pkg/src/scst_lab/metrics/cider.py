"""CIDEr-D: TF-IDF n-gram similarity with clipping and a Gaussian length penalty."""

import math
from collections.abc import Sequence

from ..config.settings import Settings
from ..exceptions import UsageError
from .ngrams import MAX_N, NGramStats, ngram_counts
from .types import MetricKind, MetricScore, NGram, Sentence

Vector = list[dict[NGram, float]]


def _tfidf(tokens: Sentence, stats: NGramStats) -> tuple[Vector, list[float]]:
    vec: Vector = [{} for _ in range(MAX_N)]
    norm = [0.0] * MAX_N
    for ngram, tf in ngram_counts(tokens).items():
        n = len(ngram) - 1
        weight = float(tf) * stats.idf(ngram)
        vec[n][ngram] = weight
        norm[n] += weight * weight
    return vec, [math.sqrt(x) for x in norm]


def _similarity(
    cand: tuple[Vector, list[float], int],
    ref: tuple[Vector, list[float], int],
    sigma: float,
) -> list[float]:
    vec_c, norm_c, len_c = cand
    vec_r, norm_r, len_r = ref
    delta = float(len_c - len_r)
    penalty = math.exp(-(delta**2) / (2 * sigma**2))
    sims = []
    for n in range(MAX_N):
        val = 0.0
        for ngram, weight in vec_c[n].items():
            # clip candidate weight to the reference weight
            ref_weight = vec_r[n].get(ngram, 0.0)
            val += min(weight, ref_weight) * ref_weight
        if norm_c[n] != 0 and norm_r[n] != 0:
            val /= norm_c[n] * norm_r[n]
        sims.append(val * penalty)
    return sims


def cider_d_sentence(
    candidate: Sentence,
    references: Sequence[Sentence],
    stats: NGramStats,
    sigma: float = Settings.CIDER_SIGMA,
) -> float:
    """CIDEr-D of one candidate against its reference set, in [0, 10].

    Raises:
        UsageError: If ``references`` is empty.
    """
    if not references:
        raise UsageError("CIDEr-D needs at least one reference")
    vc, nc = _tfidf(candidate, stats)
    cand = (vc, nc, len(candidate))
    total = 0.0
    for ref in references:
        vr, nr = _tfidf(ref, stats)
        total += sum(_similarity(cand, (vr, nr, len(ref)), sigma)) / MAX_N
    return total / len(references) * 10.0


def cider_d(
    candidates: Sequence[Sentence],
    references: Sequence[Sequence[Sentence]],
    stats: NGramStats,
    sigma: float = Settings.CIDER_SIGMA,
) -> MetricScore:
    """Sentence CIDEr-D per candidate; the corpus score is their mean."""
    if len(candidates) != len(references):
        raise UsageError(f"{len(candidates)} candidates for {len(references)} reference sets")
    scores = [
        cider_d_sentence(c, refs, stats, sigma)
        for c, refs in zip(candidates, references, strict=True)
    ]
    corpus = sum(scores) / len(scores) if scores else 0.0
    return MetricScore(kind=MetricKind.CIDER, sentence_scores=scores, corpus_score=corpus)
