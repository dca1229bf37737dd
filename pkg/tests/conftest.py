"""Test configuration and shared fixtures."""

import sys
from collections.abc import Callable
from pathlib import Path

import numpy as np
import pytest

# Add src to PYTHONPATH
root = Path(__file__).parent.parent
sys.path.insert(0, str(root / "src"))

from scst_lab.harness.dataset import gen_dataset  # noqa: E402
from scst_lab.models.captioner import Captioner  # noqa: E402
from scst_lab.models.types import Architecture, ModelConfig  # noqa: E402

TINY = {"vocab_size": 6, "hidden": 4, "feature_dim": 5, "n_locations": 3, "max_length": 4}


def tiny_features(model: Captioner, batch: int, seed: int = 0) -> np.ndarray:
    """Random features in the view ``model`` consumes."""
    rng = np.random.default_rng(seed)
    cfg = model.cfg
    if cfg.architecture.attends:
        return rng.normal(size=(batch, cfg.n_locations, cfg.feature_dim))
    return rng.normal(size=(batch, cfg.feature_dim))


@pytest.fixture
def make_features() -> Callable[..., np.ndarray]:
    return tiny_features


@pytest.fixture
def make_model() -> Callable[..., Captioner]:
    """Factory for tiny captioners; keyword arguments override ``TINY``."""

    def _make(
        architecture: Architecture = Architecture.FC,
        seed: int = 0,
        init_scale: float = 0.5,
        **overrides: int,
    ) -> Captioner:
        cfg = ModelConfig(
            architecture=architecture, init_scale=init_scale, **(TINY | overrides)
        )
        return Captioner(cfg, rng=np.random.default_rng(seed))

    return _make


@pytest.fixture
def zero_model(make_model: Callable[..., Captioner]) -> Captioner:
    """FC captioner with every weight zero: uniform posteriors at every step."""
    model = make_model()
    for name in model.store:
        model.store[name][...] = 0.0
    return model


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory: pytest.TempPathFactory) -> Path:
    """A small generated dataset shared by the harness tests (read-only)."""
    out = tmp_path_factory.mktemp("data")
    return gen_dataset(out, seed=3, n_train=40, n_val=12, n_test=12, min_count=1)
