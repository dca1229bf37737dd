"""Laboratory configuration settings"""

import os
import tomllib
from pathlib import Path
from typing import Any, Final

from ..exceptions import ConfigError


class Settings:
    """Laboratory configuration settings"""

    # Base directory
    BASE_DIR: Final[Path] = Path(__file__).parent.parent.parent.parent

    # Experiment directories
    DATA_DIR: Final[Path] = BASE_DIR / "data"
    RUNS_DIR: Final[Path] = BASE_DIR / "runs"

    # Dataset files
    TRAIN_FILE: Final[str] = "train.jsonl"
    VAL_FILE: Final[str] = "val.jsonl"
    TEST_FILE: Final[str] = "test.jsonl"
    VOCAB_FILE: Final[str] = "vocab.json"

    # Toy dataset sizes
    N_TRAIN: int = 2000
    N_VAL: int = 200
    N_TEST: int = 200
    REFS_PER_SCENE: Final[int] = 5
    MIN_WORD_COUNT: int = 5

    # Model defaults
    HIDDEN_DIM: int = 64
    N_LOCATIONS: int = 9
    MAX_LENGTH: int = 12
    INIT_SCALE: Final[float] = 0.08

    # XE recipe
    XE_LEARNING_RATE: float = 5e-4
    ANNEAL_FACTOR: float = 0.8
    ANNEAL_EVERY: int = 3
    SS_INCREASE: float = 0.05
    SS_EVERY: int = 5
    SS_MAX: float = 0.25

    # RL recipe
    RL_LEARNING_RATE: float = 5e-5
    BASELINE_LEARNING_RATE: float = 1e-3
    BATCH_SIZE: int = 50
    XE_EPOCHS: int = 25
    RL_EPOCHS: int = 10

    # ADAM constants
    ADAM_BETA1: Final[float] = 0.9
    ADAM_BETA2: Final[float] = 0.999
    ADAM_EPSILON: Final[float] = 1e-8

    # Metrics
    CIDER_SIGMA: Final[float] = 6.0
    BLEU_SMOOTHING: Final[float] = 1e-9
    ROUGE_BETA: Final[float] = 1.2

    # Decoding
    BEAM_WIDTH: int = 1
    PRUNE_MARGIN: float = 5.0

    # Logging configuration
    LOG_LEVEL: str = "INFO"
    XE_LOG_FILE: Final[str] = "xe_log.csv"
    RL_LOG_FILE: Final[str] = "diagnostics.csv"
    XE_CHECKPOINT: Final[str] = "xe_best.ckpt"
    RL_CHECKPOINT: Final[str] = "rl_best.ckpt"

    # Worker pool
    THREADS_ENV_VAR: Final[str] = "SCST_LAB_THREADS"


def thread_count() -> int:
    """Return the decode worker count from the environment (default 1)."""
    raw = os.environ.get(Settings.THREADS_ENV_VAR, "1")
    try:
        count = int(raw)
    except ValueError as e:
        raise ConfigError(f"{Settings.THREADS_ENV_VAR} must be an integer: {raw}") from e
    if count < 1:
        raise ConfigError(f"{Settings.THREADS_ENV_VAR} must be positive, got {count}")
    return count


def load_config_file(path: Path) -> dict[str, Any]:
    """Read a TOML run configuration into a section → values mapping.

    Known sections are ``model``, ``train``, ``rl`` and ``decode``.

    Raises:
        ConfigError: If the file is missing, malformed or has unknown sections.
    """
    try:
        with open(path, "rb") as f:
            raw = tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError(f"Config file not found: {path}") from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"Malformed config file {path}: {e!s}") from e

    unknown = set(raw) - {"model", "train", "rl", "decode"}
    if unknown:
        raise ConfigError(f"Unknown config sections in {path}: {sorted(unknown)}")
    return raw
