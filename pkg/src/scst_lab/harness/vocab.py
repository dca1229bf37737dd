"""Word inventory with reserved BOS, EOS and UNK ids."""

import json
import logging
from collections import Counter
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Final

from ..exceptions import DatasetError

logger = logging.getLogger(__name__)

BOS: Final = "<bos>"
EOS: Final = "<eos>"
UNK: Final = "<unk>"
RESERVED: Final = (BOS, EOS, UNK)


class Vocab:
    """Bidirectional word ↔ id map; ids 0, 1, 2 are ``<bos>``, ``<eos>``, ``<unk>``.

    Args:
        words: Non-reserved words in id order.
        counts: Training counts (kept in the vocab file for inspection).
        min_count: Threshold used to build the vocabulary.
    """

    bos_id: Final = 0
    eos_id: Final = 1
    unk_id: Final = 2

    def __init__(
        self, words: Sequence[str], counts: dict[str, int] | None = None, min_count: int = 1
    ) -> None:
        clash = set(words) & set(RESERVED)
        if clash:
            raise DatasetError(f"Reserved tokens in word list: {sorted(clash)}")
        self.words = [*RESERVED, *words]
        self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise DatasetError("Duplicate words in vocabulary")
        self.counts = dict(counts or {})
        self.min_count = min_count

    def __len__(self) -> int:
        return len(self.words)

    @classmethod
    def build(cls, sentences: Iterable[Sequence[str]], min_count: int) -> "Vocab":
        """Keep words seen at least ``min_count`` times; the rest map to UNK."""
        counts = Counter(w for sentence in sentences for w in sentence)
        kept = sorted(w for w, c in counts.items() if c >= min_count)
        dropped = len(counts) - len(kept)
        if dropped:
            logger.info(f"Mapped {dropped} rare words (count < {min_count}) to {UNK}")
        return cls(kept, dict(sorted(counts.items())), min_count)

    def encode(self, words: Sequence[str], add_eos: bool = True) -> list[int]:
        ids = [self.index.get(w, self.unk_id) for w in words]
        return [*ids, self.eos_id] if add_eos else ids

    def decode(self, ids: Sequence[int], strip_eos: bool = True) -> list[str]:
        """Words for ``ids``, stopping at the first EOS when ``strip_eos``."""
        out = []
        for i in ids:
            if strip_eos and i == self.eos_id:
                break
            out.append(self.words[i] if 0 <= i < len(self.words) else UNK)
        return out

    def to_json(self) -> str:
        return json.dumps(
            {
                "words": self.words[len(RESERVED) :],
                "counts": self.counts,
                "min_count": self.min_count,
            },
            indent=1,
            sort_keys=True,
        )

    def save(self, path: Path) -> None:
        try:
            path.write_text(self.to_json() + "\n", encoding="utf-8")
        except OSError as e:
            raise DatasetError(f"Failed to write vocabulary {path}: {e!s}") from e

    @classmethod
    def load(cls, path: Path) -> "Vocab":
        """Read a vocabulary file.

        Raises:
            DatasetError: If the file is missing or malformed.
        """
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
            return cls(raw["words"], raw.get("counts"), int(raw.get("min_count", 1)))
        except FileNotFoundError:
            raise DatasetError(f"Vocabulary file not found: {path}") from None
        except (OSError, ValueError, KeyError, TypeError) as e:
            raise DatasetError(f"Malformed vocabulary file {path}: {e!s}") from e
