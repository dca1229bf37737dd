"""Learned reward baseline: a linear read-out of the decoder hidden state."""

import logging

import numpy as np

from ..config.settings import Settings
from ..diffcore import ops
from ..diffcore.adam import AdamConfig, adam_step
from ..diffcore.params import ParamStore
from ..diffcore.tensor import Tensor
from ..exceptions import UsageError
from ..models.rollout import RolloutRecord

logger = logging.getLogger(__name__)


class LearnedBaseline:
    """b_t = h_t · w + b, averaged over realized steps into a sequence baseline.

    The baseline owns its parameters and ADAM state. It reads hidden states
    out of a rollout record as plain arrays, so its updates never reach the
    captioner's parameters.

    Args:
        hidden: Decoder hidden size H.
        cfg: Optimizer settings for the baseline.
    """

    def __init__(self, hidden: int, cfg: AdamConfig | None = None) -> None:
        self.cfg = cfg or AdamConfig(lr=Settings.BASELINE_LEARNING_RATE)
        self.store = ParamStore()
        self.store.add("w", np.zeros((hidden, 1)))
        self.store.add("b", np.zeros(1))

    def predict_steps(self, record: RolloutRecord) -> Tensor:
        """Per-step predictions b_t (B, S)."""
        return ops.matmul(record.hiddens, self.store["w"])[..., 0] + self.store["b"][0]

    def predict(self, record: RolloutRecord) -> Tensor:
        """Sequence baseline: masked mean of b_t over realized steps (B,)."""
        steps = self.predict_steps(record)
        return (steps * record.mask).sum(axis=1) / np.maximum(record.mask.sum(axis=1), 1.0)

    def update(self, record: RolloutRecord, rewards: Tensor) -> float:
        """One ADAM step on the MSE between the sequence baseline and r(w^s).

        Returns:
            The loss before the update.
        """
        if rewards.shape != (record.batch_size,):
            raise UsageError(
                f"Baseline targets {rewards.shape} do not match batch {record.batch_size}"
            )
        pred = self.predict(record)
        err = pred - rewards
        loss = float(np.mean(err**2))

        dpred = 2.0 * err / record.batch_size
        dsteps = dpred[:, None] * record.mask / np.maximum(record.mask.sum(axis=1), 1.0)[:, None]
        _, dw = ops.matmul_backward(record.hiddens, self.store["w"], dsteps[..., None])
        self.store.accumulate("w", dw)
        self.store.accumulate("b", np.array([dsteps.sum()]))
        adam_step(self.store, self.cfg)
        logger.debug(f"Baseline MSE {loss:.5f}")
        return loss
