"""
Type definitions for the policy-gradient estimators.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from pydantic import BaseModel, Field

from ..diffcore.tensor import Tensor, TokenArray
from ..metrics.reward import RewardFn
from ..models.rollout import RolloutRecord


class EstimatorKind(str, Enum):
    """Gradient estimator names as used on the command line."""

    REINFORCE = "reinforce"
    BASELINE = "baseline"  # REINFORCE with a learned baseline
    MIXER = "mixer"
    SCST = "scst"
    TD_SCST = "td-scst"
    TRUE_SCST = "true-scst"

    @property
    def needs_greedy(self) -> bool:
        return self is EstimatorKind.SCST

    @property
    def needs_learned_baseline(self) -> bool:
        return self in (EstimatorKind.BASELINE, EstimatorKind.MIXER)


@dataclass
class EpisodeBatch:
    """One minibatch of rollouts and the rewards the estimators consume.

    Attributes:
        sampled: Rollout w^s (sampled, or a mixer rollout).
        rewards: r(w^s) per example.
        reward: Callable scoring arbitrary sequences for these examples,
            used for greedy completions.
        greedy: Test-time rollout ŵ from the same parameters and features.
        greedy_rewards: r(ŵ) per example.
        baseline: Baseline value b used by the last estimator call.
        dlogits: Logits gradients produced by the last estimator call.
    """

    sampled: RolloutRecord
    rewards: Tensor
    reward: RewardFn
    greedy: RolloutRecord | None = None
    greedy_rewards: Tensor | None = None
    baseline: Tensor | None = None
    dlogits: Tensor | None = None

    @property
    def batch_size(self) -> int:
        return self.sampled.batch_size


class MixerSchedule(BaseModel):
    """Number of trailing words trained under the reward, per epoch.

    Epoch ``e`` (0-indexed) trains the last ``initial_rl_words + step * e``
    words of each sentence under REINFORCE and the prefix under XE.
    """

    initial_rl_words: int = Field(1, ge=0)
    step: int = Field(1, ge=0)

    def rl_words(self, epoch: int) -> int:
        return self.initial_rl_words + self.step * epoch

    def boundaries(self, ref_lengths: TokenArray, epoch: int, max_length: int) -> TokenArray:
        """Per-example XE prefix length: max(0, L_ref − n), clamped to [0, T]."""
        prefix = np.maximum(0, np.asarray(ref_lengths, dtype=np.int64) - self.rl_words(epoch))
        return np.clip(prefix, 0, max_length)
