"""BLEU-4 with clipped n-gram precisions and a closest-reference brevity penalty."""

import math
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass

from ..config.settings import Settings
from ..exceptions import UsageError
from .ngrams import MAX_N, ngram_counts
from .types import MetricKind, MetricScore, NGram, Sentence


@dataclass(frozen=True)
class BleuCounts:
    """Clipped matches and candidate n-gram totals for one sentence."""

    correct: tuple[int, ...]
    guess: tuple[int, ...]
    cand_len: int
    ref_len: int


def closest_ref_length(cand_len: int, ref_lens: Sequence[int]) -> int:
    """Reference length nearest to the candidate; ties go to the shorter one."""
    return min((abs(length - cand_len), length) for length in ref_lens)[1]


def bleu_counts(candidate: Sentence, references: Sequence[Sentence]) -> BleuCounts:
    if not references:
        raise UsageError("BLEU needs at least one reference")
    cand = ngram_counts(candidate)
    max_ref: Counter[NGram] = Counter()
    for ref in references:
        max_ref |= ngram_counts(ref)
    correct = [0] * MAX_N
    guess = [0] * MAX_N
    for ngram, count in cand.items():
        n = len(ngram) - 1
        guess[n] += count
        correct[n] += min(count, max_ref[ngram])
    return BleuCounts(
        correct=tuple(correct),
        guess=tuple(guess),
        cand_len=len(candidate),
        ref_len=closest_ref_length(len(candidate), [len(r) for r in references]),
    )


def _brevity_penalty(cand_len: int, ref_len: int) -> float:
    if cand_len >= ref_len:
        return 1.0
    return math.exp(1.0 - ref_len / cand_len)


def sentence_bleu(
    candidate: Sentence,
    references: Sequence[Sentence],
    smoothing: float = Settings.BLEU_SMOOTHING,
) -> float:
    """Smoothed sentence BLEU-4; zero clipped counts become ``smoothing``.

    A candidate of k < 4 words has no n-grams above order k, so even an exact
    copy of a reference scores ``smoothing ** ((4 - k) / 4)``: about 0.0056 at
    1e-9 for three words and far less for fewer. Only candidates of four or
    more words can reach 1.
    """
    counts = bleu_counts(candidate, references)
    if counts.cand_len == 0:
        return 0.0
    log_p = 0.0
    for correct, guess in zip(counts.correct, counts.guess, strict=True):
        log_p += math.log((correct if correct > 0 else smoothing) / max(guess, 1))
    return _brevity_penalty(counts.cand_len, counts.ref_len) * math.exp(log_p / MAX_N)


def corpus_bleu(counts: Sequence[BleuCounts]) -> float:
    """Corpus BLEU-4 from summed clipped counts; 0 if any precision is 0."""
    correct = [sum(c.correct[n] for c in counts) for n in range(MAX_N)]
    guess = [sum(c.guess[n] for c in counts) for n in range(MAX_N)]
    if min(correct) == 0:
        return 0.0
    log_p = sum(math.log(m / g) for m, g in zip(correct, guess, strict=True)) / MAX_N
    cand_len = sum(c.cand_len for c in counts)
    ref_len = sum(c.ref_len for c in counts)
    return _brevity_penalty(cand_len, ref_len) * math.exp(log_p)


def bleu4(
    candidates: Sequence[Sentence],
    references: Sequence[Sequence[Sentence]],
    smoothing: float = Settings.BLEU_SMOOTHING,
) -> MetricScore:
    if len(candidates) != len(references):
        raise UsageError(f"{len(candidates)} candidates for {len(references)} reference sets")
    pairs = list(zip(candidates, references, strict=True))
    return MetricScore(
        kind=MetricKind.BLEU,
        sentence_scores=[sentence_bleu(c, refs, smoothing) for c, refs in pairs],
        corpus_score=corpus_bleu([bleu_counts(c, refs) for c, refs in pairs]),
    )
