"""Per-step logits gradients for the policy-gradient estimators.

Every estimator returns ∂L/∂s_t with shape (B, S, V) for the loss
L = −E[r], i.e. ``advantage · (p_θ(·|h_t) − 1_{w_t})`` on realized steps and
zero past the first EOS. Feed the result to ``backprop_through_time``.
"""

import logging
from collections.abc import Sequence

import numpy as np

from ..diffcore.tensor import Tensor, TokenArray
from ..exceptions import UsageError
from ..models.captioner import Captioner
from ..models.rollout import RolloutRecord, complete_greedy
from .baseline import LearnedBaseline
from .types import EpisodeBatch, EstimatorKind

logger = logging.getLogger(__name__)


def score_function_grad(record: RolloutRecord) -> Tensor:
    """p_θ(·|h_t) − onehot(w_t), masked to realized steps (B, S, V)."""
    onehot = np.zeros_like(record.posteriors)
    np.put_along_axis(onehot, record.tokens[:, :, None], 1.0, axis=2)
    return (record.posteriors - onehot) * record.mask[:, :, None]


def policy_grad(record: RolloutRecord, advantage: Tensor) -> Tensor:
    """Weight the score-function gradient by a per-example (B,) or per-step (B, S) advantage."""
    adv = np.asarray(advantage, dtype=np.float64)
    if adv.ndim == 1:
        adv = np.broadcast_to(adv[:, None], record.mask.shape)
    if adv.shape != record.mask.shape:
        raise UsageError(f"Advantage shape {adv.shape} does not match rollout {record.mask.shape}")
    return adv[:, :, None] * score_function_grad(record)


def reinforce_grad(batch: EpisodeBatch, baseline: float | Tensor = 0.0) -> Tensor:
    """(r(w^s) − b)(p − 1_{w^s_t}); b = 0 is plain REINFORCE."""
    b = np.broadcast_to(np.asarray(baseline, dtype=np.float64), batch.rewards.shape)
    batch.baseline = np.array(b)
    batch.dlogits = policy_grad(batch.sampled, batch.rewards - b)
    return batch.dlogits


def scst_grad(batch: EpisodeBatch) -> Tensor:
    """REINFORCE baselined by the reward of the greedy decode, b = r(ŵ).

    Raises:
        UsageError: If the batch has no greedy rollout.
    """
    if batch.greedy is None:
        raise UsageError("SCST needs the greedy rollout of the same batch")
    if batch.greedy_rewards is None:
        batch.greedy_rewards = batch.reward(batch.greedy.sequences())
    return reinforce_grad(batch, batch.greedy_rewards)


def learned_baseline_grad(batch: EpisodeBatch, baseline: LearnedBaseline) -> Tensor:
    """REINFORCE with the (detached) learned sequence baseline.

    The baseline is not trained here; call :func:`learned_baseline_update`.
    """
    return reinforce_grad(batch, baseline.predict(batch.sampled))


def learned_baseline_update(batch: EpisodeBatch, baseline: LearnedBaseline) -> float:
    """Fit the baseline to r(w^s) by one MSE step; returns the loss."""
    return baseline.update(batch.sampled, batch.rewards)


def mixer_grad(batch: EpisodeBatch, boundaries: TokenArray, baseline: LearnedBaseline) -> Tensor:
    """XE gradient on each example's ground-truth prefix, learned-baseline REINFORCE after it.

    Args:
        batch: Batch whose sampled rollout ran in MIXER mode with the same
            boundaries.
        boundaries: Per-example prefix lengths (clamped to [0, T]).
        baseline: Learned baseline for the sampled suffix.
    """
    record = batch.sampled
    T = record.steps
    cut = np.clip(np.asarray(boundaries, dtype=np.int64), 0, T)
    prefix = np.arange(T)[None, :] < cut[:, None]

    b = baseline.predict(record)
    batch.baseline = b
    adv = np.where(prefix, 1.0, (batch.rewards - b)[:, None])
    batch.dlogits = adv[:, :, None] * score_function_grad(record)
    return batch.dlogits


def _greedy_completion_rewards(
    batch: EpisodeBatch, model: Captioner, starts: Sequence[int]
) -> Tensor:
    """Rewards of each sampled prefix completed greedily, shape (B, len(starts))."""
    cols = [batch.reward(complete_greedy(model, batch.sampled, s)) for s in starts]
    return np.stack(cols, axis=1)


def td_scst_grad(batch: EpisodeBatch, model: Captioner) -> Tensor:
    """Step-t advantage r(w^s) − r(w̄_t), w̄_t = sampled prefix w^s_{<t} + greedy from t.

    At t = 0 the completion is the plain greedy decode, so the first step
    matches SCST.
    """
    record = batch.sampled
    bar = _greedy_completion_rewards(batch, model, range(record.steps))
    batch.baseline = bar
    batch.dlogits = policy_grad(record, batch.rewards[:, None] - bar)
    return batch.dlogits


def true_scst_grad(batch: EpisodeBatch, model: Captioner, n_future: int) -> Tensor:
    """Step-t advantage r(w̃_t) − r(w̄_t).

    w̃_t keeps n_future sampled words beyond step t before completing
    greedily; this baseline depends on the action at t, so the estimator is
    biased. ``n_future`` ≥ T gives w̃_t = w^s, i.e. TD-SCST.

    Raises:
        UsageError: If ``n_future`` < 1.
    """
    if n_future < 1:
        raise UsageError(f"True SCST needs n_future >= 1, got {n_future}")
    record = batch.sampled
    S = record.steps
    bar = _greedy_completion_rewards(batch, model, range(S))
    tilde = _greedy_completion_rewards(batch, model, [min(t + 1 + n_future, S) for t in range(S)])
    batch.baseline = bar
    batch.dlogits = policy_grad(record, tilde - bar)
    return batch.dlogits


def estimator_grad(
    kind: EstimatorKind,
    batch: EpisodeBatch,
    model: Captioner | None = None,
    baseline: LearnedBaseline | None = None,
    boundaries: TokenArray | None = None,
    n_future: int = 1,
) -> Tensor:
    """Dispatch to the estimator named by ``kind``.

    Raises:
        UsageError: If a dependency the estimator needs is missing.
    """
    if kind is EstimatorKind.REINFORCE:
        return reinforce_grad(batch)
    if kind is EstimatorKind.SCST:
        return scst_grad(batch)
    if kind.needs_learned_baseline and baseline is None:
        raise UsageError(f"{kind.value} needs a learned baseline")
    if kind is EstimatorKind.BASELINE:
        assert baseline is not None
        return learned_baseline_grad(batch, baseline)
    if kind is EstimatorKind.MIXER:
        assert baseline is not None
        if boundaries is None:
            raise UsageError("MIXER needs per-example boundaries")
        return mixer_grad(batch, boundaries, baseline)
    if model is None:
        raise UsageError(f"{kind.value} needs the model for greedy completions")
    if kind is EstimatorKind.TD_SCST:
        return td_scst_grad(batch, model)
    return true_scst_grad(batch, model, n_future)
