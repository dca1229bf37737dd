"""
Type definitions for the recurrent captioners.

Architectures follow the three LSTM decoders: FC (image as the first word),
Att2in (attention feature into the cell input only) and Att2all (attention
feature into the cell input, all three gates and the output logits).
"""

from enum import Enum

from pydantic import BaseModel, Field, model_validator

from ..config.settings import Settings


class Architecture(str, Enum):
    """Captioner architecture tag, also the checkpoint model-kind tag."""

    FC = "fc"
    ATT2IN = "att2in"
    ATT2ALL = "att2all"

    @property
    def attends(self) -> bool:
        return self is not Architecture.FC


class RolloutMode(str, Enum):
    """How the previous token is chosen while unrolling the decoder."""

    TEACHER = "teacher"  # ground truth w*_{t-1}
    SCHEDULED = "scheduled"  # ground truth or a fed-back model token
    SAMPLED = "sampled"  # w_t ~ softmax(s_t)
    GREEDY = "greedy"  # argmax
    MIXER = "mixer"  # ground-truth prefix, sampled suffix


class Feedback(str, Enum):
    """Which model token scheduled sampling feeds back."""

    SAMPLE = "sample"
    ARGMAX = "argmax"


class ModelConfig(BaseModel):
    """Captioner dimensions.

    ``hidden`` is shared by the LSTM state, word and image embeddings and the
    attention embedding.
    """

    architecture: Architecture = Architecture.FC
    vocab_size: int = Field(ge=3)
    hidden: int = Field(Settings.HIDDEN_DIM, ge=1)
    feature_dim: int = Field(ge=1)
    n_locations: int = Field(Settings.N_LOCATIONS, ge=0)
    max_length: int = Field(Settings.MAX_LENGTH, ge=1)
    init_scale: float = Field(Settings.INIT_SCALE, gt=0)
    bos_id: int = Field(0, ge=0)
    eos_id: int = Field(1, ge=0)

    @model_validator(mode="after")
    def check_reserved_tokens(self) -> "ModelConfig":
        if self.bos_id >= self.vocab_size or self.eos_id >= self.vocab_size:
            raise ValueError("Vocabulary must include BOS and EOS ids")
        if self.bos_id == self.eos_id:
            raise ValueError("BOS and EOS must be distinct tokens")
        return self
