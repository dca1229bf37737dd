"""Synthetic caption dataset: generation, JSON-lines files and loading."""

import json
import logging
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from ..config.settings import Settings
from ..core import ExperimentStage
from ..diffcore.tensor import Tensor
from ..exceptions import DatasetError
from ..models.captioner import Captioner
from .grammar import CaptionGrammar, encode_scene, random_scene
from .types import CaptionExample
from .vocab import Vocab

logger = logging.getLogger(__name__)

SPLIT_FILES = {
    "train": Settings.TRAIN_FILE,
    "val": Settings.VAL_FILE,
    "test": Settings.TEST_FILE,
}


@dataclass
class SplitData:
    """One split as arrays, with references encoded under the vocabulary.

    Attributes:
        ids: Example ids in file order.
        global_feats: (B, F) global features.
        spatial_feats: (B, N, F) per-location features.
        references: Per example, reference token lists each ending in EOS.
    """

    ids: list[int]
    global_feats: Tensor
    spatial_feats: Tensor
    references: list[list[list[int]]]

    def __len__(self) -> int:
        return len(self.ids)

    def features_for(self, model: Captioner, rows: Sequence[int] | None = None) -> Tensor:
        feats = model.select_features(self.global_feats, self.spatial_feats)
        return feats if rows is None else feats[np.asarray(rows, dtype=np.int64)]

    @property
    def feature_dim(self) -> int:
        return int(self.global_feats.shape[1])

    @property
    def n_locations(self) -> int:
        return int(self.spatial_feats.shape[1])


def make_examples(
    n: int,
    start_id: int,
    grammar: CaptionGrammar,
    n_locations: int,
    rng: np.random.Generator,
) -> list[CaptionExample]:
    examples = []
    for i in range(n):
        scene = random_scene(rng)
        global_feats, spatial = encode_scene(scene, n_locations, rng)
        examples.append(
            CaptionExample(
                id=start_id + i,
                scene=scene,
                global_features=global_feats.tolist(),
                spatial_features=spatial.tolist(),
                references=grammar.references(scene, rng),
            )
        )
    return examples


def write_split(path: Path, examples: Sequence[CaptionExample]) -> None:
    lines = [json.dumps(ex.model_dump(mode="json"), sort_keys=True) for ex in examples]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_split(path: Path) -> list[CaptionExample]:
    """Parse a JSON-lines split file.

    Raises:
        DatasetError: If the file is missing or a row is invalid.
    """
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise DatasetError(f"Split file not found: {path}") from None
    except OSError as e:
        raise DatasetError(f"Failed to read split {path}: {e!s}") from e

    examples = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            examples.append(CaptionExample.model_validate_json(line))
        except ValidationError as e:
            raise DatasetError(f"Invalid example at {path}:{lineno}: {e!s}") from e
    if not examples:
        raise DatasetError(f"Split file is empty: {path}")
    return examples


def to_split_data(examples: Sequence[CaptionExample], vocab: Vocab) -> SplitData:
    return SplitData(
        ids=[ex.id for ex in examples],
        global_feats=np.array([ex.global_features for ex in examples], dtype=np.float64),
        spatial_feats=np.array([ex.spatial_features for ex in examples], dtype=np.float64),
        references=[[vocab.encode(ref) for ref in ex.references] for ex in examples],
    )


def load_split(data_dir: Path, name: str, vocab: Vocab | None = None) -> SplitData:
    """Load ``train``, ``val`` or ``test`` from a dataset directory."""
    if name not in SPLIT_FILES:
        raise DatasetError(f"Unknown split {name!r} (expected one of {sorted(SPLIT_FILES)})")
    vocab = vocab or Vocab.load(data_dir / Settings.VOCAB_FILE)
    return to_split_data(read_split(data_dir / SPLIT_FILES[name]), vocab)


class GenerateDataset(ExperimentStage[None, Path]):
    """Write deterministic train/val/test JSON-lines files and the vocabulary.

    Args:
        out_dir: Dataset directory (created if needed).
        seed: Generator seed; equal seeds give byte-identical files.
        n_train: Training scenes.
        n_val: Validation scenes.
        n_test: Test scenes.
        min_count: Training words seen fewer times map to UNK.
        refs_per_scene: References per scene.
        n_locations: Spatial locations N.
        progress_enabled: Whether to enable progress tracking.
    """

    def __init__(
        self,
        out_dir: Path | None = None,
        seed: int = 0,
        n_train: int = Settings.N_TRAIN,
        n_val: int = Settings.N_VAL,
        n_test: int = Settings.N_TEST,
        min_count: int = Settings.MIN_WORD_COUNT,
        refs_per_scene: int = Settings.REFS_PER_SCENE,
        n_locations: int = Settings.N_LOCATIONS,
        progress_enabled: bool = True,
    ) -> None:
        super().__init__(progress_enabled=progress_enabled)
        if min(n_train, n_val, n_test) < 1:
            raise DatasetError("Every split needs at least one example")
        self.out_dir = out_dir or Settings.DATA_DIR
        self.seed = seed
        self.sizes = {"train": n_train, "val": n_val, "test": n_test}
        self.min_count = min_count
        self.grammar = CaptionGrammar(refs_per_scene=refs_per_scene)
        self.n_locations = n_locations

    def process(self, _: None) -> Path:
        """Generate the dataset and return its directory.

        Raises:
            DatasetError: If generation or writing fails.
        """
        logger.info(f"Generating toy dataset in {self.out_dir} (seed {self.seed})")
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            rng = np.random.default_rng(self.seed)
            splits = {}
            next_id = 0
            self.init_progress(len(self.sizes), "Generating splits")
            try:
                for name, size in self.sizes.items():
                    splits[name] = make_examples(size, next_id, self.grammar, self.n_locations, rng)
                    next_id += size
                    self.update_progress()
            finally:
                self.close_progress()

            vocab = Vocab.build(
                (ref for ex in splits["train"] for ref in ex.references), self.min_count
            )
            for name, examples in splits.items():
                write_split(self.out_dir / SPLIT_FILES[name], examples)
            vocab.save(self.out_dir / Settings.VOCAB_FILE)
            logger.info(
                f"Wrote {sum(self.sizes.values())} scenes, vocabulary of {len(vocab)} words"
            )
            return self.out_dir

        except DatasetError:
            raise
        except Exception as e:
            logger.error(f"Dataset generation failed: {e!s}")
            raise DatasetError(f"Failed to generate dataset: {e!s}") from e


def gen_dataset(
    out_dir: Path,
    seed: int = 0,
    n_train: int = Settings.N_TRAIN,
    n_val: int = Settings.N_VAL,
    n_test: int = Settings.N_TEST,
    min_count: int = Settings.MIN_WORD_COUNT,
    progress_enabled: bool = False,
) -> Path:
    """Functional form of :class:`GenerateDataset`."""
    stage = GenerateDataset(
        out_dir, seed, n_train, n_val, n_test, min_count, progress_enabled=progress_enabled
    )
    return stage.process(None)
