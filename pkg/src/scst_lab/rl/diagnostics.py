"""Estimator diagnostics: gradient variance across examples and posterior entropy."""

import numpy as np
from pydantic import BaseModel

from ..diffcore.tensor import Tensor
from ..models.rollout import RolloutRecord


class DiagnosticsRow(BaseModel):
    """One epoch of one estimator, as written to the diagnostics CSV.

    The greedy scores are measured on the validation split after the epoch.
    ``true_scst_bias`` is only filled in when the estimator is True SCST and
    the model's output space is small enough to enumerate.
    """

    epoch: int
    estimator: str
    grad_variance_mean: float
    grad_variance_std: float
    posterior_entropy_mean: float
    greedy_cider: float
    greedy_bleu4: float = 0.0
    greedy_rouge_l: float = 0.0
    sampled_reward_mean: float
    true_scst_bias: float | None = None


def gradient_variance(dlogits: Tensor) -> float:
    """Variance across the batch of the flattened logits gradient, averaged over coordinates."""
    flat = dlogits.reshape(dlogits.shape[0], -1)
    return float(np.var(flat, axis=0).mean())


def posterior_entropy(record: RolloutRecord) -> float:
    """Mean entropy of the word posteriors over realized steps."""
    post = record.posteriors
    logp = np.log(np.where(post > 0, post, 1.0))
    entropy = -(post * logp).sum(axis=2)
    return float((entropy * record.mask).sum() / max(record.mask.sum(), 1.0))


class EpochDiagnostics:
    """Accumulates per-batch statistics over one epoch."""

    def __init__(self, estimator: str) -> None:
        self.estimator = estimator
        self.variances: list[float] = []
        self.entropies: list[float] = []
        self.rewards: list[float] = []

    def add_batch(self, dlogits: Tensor, record: RolloutRecord, rewards: Tensor) -> None:
        self.variances.append(gradient_variance(dlogits))
        self.entropies.append(posterior_entropy(record))
        self.rewards.append(float(np.mean(rewards)))

    def summary(
        self,
        epoch: int,
        greedy_cider: float,
        greedy_bleu4: float = 0.0,
        greedy_rouge_l: float = 0.0,
        true_scst_bias: float | None = None,
    ) -> DiagnosticsRow:
        var = np.asarray(self.variances) if self.variances else np.zeros(1)
        return DiagnosticsRow(
            epoch=epoch,
            estimator=self.estimator,
            grad_variance_mean=float(var.mean()),
            grad_variance_std=float(var.std()),
            posterior_entropy_mean=float(np.mean(self.entropies)) if self.entropies else 0.0,
            greedy_cider=greedy_cider,
            greedy_bleu4=greedy_bleu4,
            greedy_rouge_l=greedy_rouge_l,
            sampled_reward_mean=float(np.mean(self.rewards)) if self.rewards else 0.0,
            true_scst_bias=true_scst_bias,
        )


def estimator_diagnostics(
    batches: list[tuple[Tensor, RolloutRecord, Tensor]],
    epoch: int,
    estimator: str,
    greedy_cider: float,
    greedy_bleu4: float = 0.0,
    greedy_rouge_l: float = 0.0,
    true_scst_bias: float | None = None,
) -> DiagnosticsRow:
    """Summarize (dlogits, sampled rollout, rewards) triples of one epoch."""
    diag = EpochDiagnostics(estimator)
    for dlogits, record, rewards in batches:
        diag.add_batch(dlogits, record, rewards)
    return diag.summary(epoch, greedy_cider, greedy_bleu4, greedy_rouge_l, true_scst_bias)
