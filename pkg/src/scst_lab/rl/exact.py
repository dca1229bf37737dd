"""Exact expectations over every sequence a tiny model can emit.

With vocabulary V and length cap T the support is all EOS-terminated
sequences of length ≤ T plus the length-T sequences without EOS. Each one
is replayed under teacher forcing, which records exactly the posteriors a
sampled rollout would have seen along it.
"""

from itertools import product

import numpy as np

from ..diffcore.tensor import Tensor
from ..exceptions import UsageError
from ..metrics.reward import RewardFn
from ..models.bptt import backprop_through_time
from ..models.captioner import Captioner
from ..models.rollout import pad_sequences, rollout
from ..models.types import RolloutMode
from .estimators import estimator_grad, reinforce_grad
from .types import EpisodeBatch, EstimatorKind

MAX_SUPPORT = 100_000


def support_size(vocab_size: int, max_length: int) -> int:
    """Number of sequences a model with V words and length cap T can emit."""
    words = vocab_size - 1
    return sum(words**k for k in range(max_length)) + words**max_length


def enumerate_sequences(vocab_size: int, max_length: int, eos_id: int) -> list[list[int]]:
    """All sequences in the support, shortest first, lexicographic within a length."""
    words = [w for w in range(vocab_size) if w != eos_id]
    size = support_size(vocab_size, max_length)
    if size > MAX_SUPPORT:
        raise UsageError(f"Support of {size} sequences is too large to enumerate")
    seqs: list[list[int]] = []
    for length in range(1, max_length + 1):
        seqs.extend([*prefix, eos_id] for prefix in product(words, repeat=length - 1))
    seqs.extend(list(seq) for seq in product(words, repeat=max_length))
    return seqs


def enumerated_batch(
    model: Captioner, features: Tensor, reward: RewardFn
) -> tuple[EpisodeBatch, Tensor]:
    """An episode batch holding every sequence for one example, and p_θ of each.

    Args:
        model: A tiny captioner.
        features: Features of a single example (leading axis of size 1).
        reward: Reward callable for that example.

    Returns:
        The batch (one row per sequence, greedy rollout included) and the
        sequence probabilities, which sum to 1.
    """
    if features.shape[0] != 1:
        raise UsageError("Enumeration works on a single example")
    cfg = model.cfg
    seqs = enumerate_sequences(cfg.vocab_size, cfg.max_length, cfg.eos_id)
    tiled = np.repeat(features, len(seqs), axis=0)
    refs = pad_sequences(seqs, cfg.max_length, cfg.eos_id)
    record = rollout(model, tiled, RolloutMode.TEACHER, refs=refs)
    greedy = rollout(model, tiled, RolloutMode.GREEDY)
    batch = EpisodeBatch(
        sampled=record,
        rewards=reward(record.sequences()),
        reward=reward,
        greedy=greedy,
        greedy_rewards=reward(greedy.sequences()),
    )
    return batch, np.exp(record.sequence_logprob())


def expected_gradient(
    model: Captioner, batch: EpisodeBatch, probs: Tensor, dlogits: Tensor
) -> dict[str, Tensor]:
    """Σ_w p_θ(w) ∇θ-contribution of ``dlogits`` for w, per parameter.

    The model's gradient buffers are zeroed before and after.
    """
    model.store.zero_grad()
    backprop_through_time(model, batch.sampled, dlogits * probs[:, None, None])
    grads = {name: g.copy() for name, g in model.store.grads.items()}
    model.store.zero_grad()
    return grads


def estimator_bias(
    model: Captioner,
    features: Tensor,
    reward: RewardFn,
    kind: EstimatorKind = EstimatorKind.TRUE_SCST,
    n_future: int = 1,
) -> float:
    """‖E[kind gradient] − E[REINFORCE gradient]‖ over all parameters, computed exactly.

    Zero up to rounding for the unbiased estimators. Estimators that need a
    learned baseline are not supported.

    Raises:
        UsageError: If the support is too large or ``kind`` needs a learned baseline.
    """
    batch, probs = enumerated_batch(model, features, reward)
    plain = expected_gradient(model, batch, probs, reinforce_grad(batch).copy())
    dlogits = estimator_grad(kind, batch, model, n_future=n_future)
    other = expected_gradient(model, batch, probs, dlogits)
    return float(np.sqrt(sum(np.sum((other[name] - plain[name]) ** 2) for name in plain)))
