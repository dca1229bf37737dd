"""ROUGE-L: longest-common-subsequence F-measure."""

from collections.abc import Sequence

from ..config.settings import Settings
from ..exceptions import UsageError
from .types import MetricKind, MetricScore, Sentence


def lcs_length(a: Sentence, b: Sentence) -> int:
    """Length of the longest common subsequence of two token lists."""
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def sentence_rouge_l(
    candidate: Sentence, references: Sequence[Sentence], beta: float = Settings.ROUGE_BETA
) -> float:
    """F_β of the best precision and best recall over the references."""
    if not references:
        raise UsageError("ROUGE-L needs at least one reference")
    if not candidate:
        return 0.0
    prec = rec = 0.0
    for ref in references:
        lcs = lcs_length(candidate, ref)
        prec = max(prec, lcs / len(candidate))
        rec = max(rec, lcs / len(ref) if ref else 0.0)
    if prec == 0 or rec == 0:
        return 0.0
    return ((1 + beta**2) * prec * rec) / (rec + beta**2 * prec)


def rouge_l(
    candidates: Sequence[Sentence],
    references: Sequence[Sequence[Sentence]],
    beta: float = Settings.ROUGE_BETA,
) -> MetricScore:
    if len(candidates) != len(references):
        raise UsageError(f"{len(candidates)} candidates for {len(references)} reference sets")
    scores = [
        sentence_rouge_l(c, refs, beta) for c, refs in zip(candidates, references, strict=True)
    ]
    corpus = sum(scores) / len(scores) if scores else 0.0
    return MetricScore(kind=MetricKind.ROUGE, sentence_scores=scores, corpus_score=corpus)
