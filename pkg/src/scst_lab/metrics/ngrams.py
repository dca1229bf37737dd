"""EOS-aware tokenization and n-gram statistics shared by the metrics."""

import math
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from types import MappingProxyType

from .types import NGram, Sentence

MAX_N = 4


def tokenize_for_reward(
    sequence: Sequence[int], eos_id: int, include_eos: bool = True
) -> list[int]:
    """Truncate at the first EOS, keeping the EOS itself as a scorable word.

    A sequence that never emits EOS (it hit the length cap) gets no EOS word.
    With ``include_eos=False`` the EOS is dropped as well.
    """
    tokens = list(sequence)
    if eos_id in tokens:
        cut = tokens.index(eos_id)
        return tokens[: cut + 1] if include_eos else tokens[:cut]
    return tokens


def ngram_counts(tokens: Sentence, max_n: int = MAX_N) -> Counter[NGram]:
    """Counts of every n-gram with 1 ≤ n ≤ max_n."""
    words = tuple(tokens)
    counts: Counter[NGram] = Counter()
    for n in range(1, max_n + 1):
        for i in range(len(words) - n + 1):
            counts[words[i : i + n]] += 1
    return counts


@dataclass(frozen=True)
class NGramStats:
    """Document frequencies of reference n-grams over a corpus of images.

    The document frequency of an n-gram is the number of images whose
    reference set contains it at least once. Instances are read-only, so a
    reward built on them stays fixed for a whole training run.
    """

    document_frequency: Mapping[NGram, int]
    n_images: int

    @classmethod
    def from_references(cls, references: Iterable[Sequence[Sentence]]) -> "NGramStats":
        df: Counter[NGram] = Counter()
        n_images = 0
        for refs in references:
            n_images += 1
            seen: set[NGram] = set()
            for ref in refs:
                seen.update(ngram_counts(ref))
            df.update(seen)
        return cls(document_frequency=MappingProxyType(dict(df)), n_images=n_images)

    @property
    def log_n_images(self) -> float:
        return math.log(float(self.n_images)) if self.n_images else 0.0

    def idf(self, ngram: NGram) -> float:
        """log N − log max(df, 1)."""
        return self.log_n_images - math.log(max(1.0, float(self.document_frequency.get(ngram, 0))))
