"""Collecting the rollouts and rewards of one RL minibatch."""

import numpy as np

from ..diffcore.tensor import Tensor, TokenArray
from ..metrics.reward import RewardFn
from ..models.captioner import Captioner
from ..models.rollout import rollout
from ..models.types import RolloutMode
from .types import EpisodeBatch


def collect_episode(
    model: Captioner,
    features: Tensor,
    reward: RewardFn,
    rng: np.random.Generator,
    with_greedy: bool = False,
    refs: TokenArray | None = None,
    prefix_lengths: TokenArray | None = None,
) -> EpisodeBatch:
    """Sample w^s (and optionally decode ŵ) and score them.

    Passing ``prefix_lengths`` switches the sampled rollout to MIXER mode:
    the first ``prefix_lengths[b]`` words come from ``refs``.
    """
    if prefix_lengths is None:
        sampled = rollout(model, features, RolloutMode.SAMPLED, rng=rng)
    else:
        sampled = rollout(
            model, features, RolloutMode.MIXER, refs=refs, rng=rng, prefix_lengths=prefix_lengths
        )
    batch = EpisodeBatch(sampled=sampled, rewards=reward(sampled.sequences()), reward=reward)
    if with_greedy:
        batch.greedy = rollout(model, features, RolloutMode.GREEDY)
        batch.greedy_rewards = reward(batch.greedy.sequences())
    return batch
