"""Fixtures shared by the harness tests."""

from pathlib import Path

import pytest

from scst_lab.harness.train_xe import TrainXE
from scst_lab.harness.types import ModelSpec, TrainConfig

TINY_SPEC = ModelSpec(hidden=8, max_length=6)
TINY_TRAIN = TrainConfig(xe_epochs=3, batch_size=16, xe_lr=1e-2)


@pytest.fixture(scope="session")
def xe_run(tiny_dataset: Path, tmp_path_factory: pytest.TempPathFactory) -> TrainXE:
    """A finished three-epoch XE run on the tiny dataset."""
    stage = TrainXE(
        tmp_path_factory.mktemp("xe"), TINY_SPEC, TINY_TRAIN, progress_enabled=False
    )
    stage.process(tiny_dataset)
    return stage


@pytest.fixture(scope="session")
def xe_checkpoint(xe_run: TrainXE) -> Path:
    return xe_run.checkpoint_path
