"""
Type definitions for the experiment harness.

Covers the synthetic scenes and captions, the run configuration read from
TOML, and the rows written to the CSV and JSON-lines outputs.
"""

from pathlib import Path
from typing import Any

from pydantic import BaseModel, Field, ValidationError, field_validator

from ..config.settings import Settings, load_config_file
from ..decode.types import BeamConfig
from ..exceptions import ConfigError
from ..metrics.types import MetricKind
from ..models.types import Architecture, Feedback
from ..rl.types import EstimatorKind


class ToyScene(BaseModel):
    """Attribute slots of one synthetic image."""

    object: str
    color: str
    size: str
    context: str


class CaptionExample(BaseModel):
    """One dataset row: features of a scene and its reference captions."""

    id: int = Field(ge=0)
    scene: ToyScene
    global_features: list[float]
    spatial_features: list[list[float]]
    references: list[list[str]]

    @field_validator("references")
    @classmethod
    def validate_references(cls, value: list[list[str]]) -> list[list[str]]:
        if not value:
            raise ValueError("Example needs at least one reference")
        if any(not ref for ref in value):
            raise ValueError("References must be non-empty")
        return value

    @field_validator("spatial_features")
    @classmethod
    def validate_spatial(cls, value: list[list[float]]) -> list[list[float]]:
        if value and len({len(v) for v in value}) != 1:
            raise ValueError("Spatial feature vectors must share one length")
        return value


class ModelSpec(BaseModel):
    """Model settings chosen by the user; sizes tied to the data are filled in later."""

    architecture: Architecture = Architecture.FC
    hidden: int = Field(Settings.HIDDEN_DIM, ge=1)
    max_length: int = Field(Settings.MAX_LENGTH, ge=1)
    init_scale: float = Field(Settings.INIT_SCALE, gt=0)


class TrainConfig(BaseModel):
    """Cross-entropy recipe: ADAM with annealing plus scheduled sampling."""

    seed: int = 0
    xe_epochs: int = Field(Settings.XE_EPOCHS, ge=1)
    batch_size: int = Field(Settings.BATCH_SIZE, ge=1)
    xe_lr: float = Field(Settings.XE_LEARNING_RATE, gt=0)
    anneal_factor: float = Field(Settings.ANNEAL_FACTOR, gt=0, le=1)
    anneal_every: int = Field(Settings.ANNEAL_EVERY, ge=1)
    ss_increase: float = Field(Settings.SS_INCREASE, ge=0, le=1)
    ss_every: int = Field(Settings.SS_EVERY, ge=1)
    ss_max: float = Field(Settings.SS_MAX, ge=0, le=1)
    feedback: Feedback = Feedback.SAMPLE


class RLConfig(BaseModel):
    """Policy-gradient fine-tuning recipe."""

    rl_epochs: int = Field(Settings.RL_EPOCHS, ge=1)
    rl_lr: float = Field(Settings.RL_LEARNING_RATE, gt=0)
    anneal: bool = False
    reward: MetricKind = MetricKind.CIDER
    estimator: EstimatorKind = EstimatorKind.SCST
    n_future: int = Field(1, ge=1)
    mixer_initial_words: int = Field(1, ge=0)
    mixer_step: int = Field(1, ge=0)
    baseline_lr: float = Field(Settings.BASELINE_LEARNING_RATE, gt=0)
    include_eos: bool = True


class RunConfig(BaseModel):
    """All sections of a run configuration file."""

    model: ModelSpec = Field(default_factory=ModelSpec)
    train: TrainConfig = Field(default_factory=TrainConfig)
    rl: RLConfig = Field(default_factory=RLConfig)
    decode: BeamConfig = Field(default_factory=BeamConfig)

    @classmethod
    def load(cls, path: Path | None, **overrides: dict[str, Any]) -> "RunConfig":
        """Read ``path`` (or defaults when None) and apply per-section overrides.

        Raises:
            ConfigError: If the file or any value is invalid.
        """
        raw: dict[str, Any] = load_config_file(path) if path is not None else {}
        for section, values in overrides.items():
            raw.setdefault(section, {}).update(
                {k: v for k, v in values.items() if v is not None}
            )
        try:
            return cls.model_validate(raw)
        except ValidationError as e:
            raise ConfigError(f"Invalid run configuration: {e!s}") from e


class XELogRow(BaseModel):
    epoch: int
    feedback_prob: float
    lr: float
    train_loss: float
    val_cider: float
    val_bleu4: float
    val_rouge_l: float


class EvalRow(BaseModel):
    """Corpus scores of one model (or ensemble) under one search method."""

    model: str
    search: str
    beam: int
    cider: float
    bleu4: float
    rouge_l: float


class ExampleScoreRow(BaseModel):
    id: str
    cider_d: float
    bleu4: float
    rouge_l: float


class DecodeRow(BaseModel):
    """One decoded caption as written to JSON lines."""

    id: int
    tokens: list[int]
    text: str
    logprob: float
    mean_token_logprob: float
