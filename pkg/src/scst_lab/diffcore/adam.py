"""ADAM optimizer with step-wise learning-rate annealing."""

import numpy as np
from pydantic import BaseModel, Field

from ..config.settings import Settings
from ..exceptions import NonFiniteError
from .params import ParamStore


class AdamConfig(BaseModel):
    """ADAM hyper-parameters plus the epoch annealing schedule."""

    lr: float = Field(Settings.XE_LEARNING_RATE, gt=0)
    beta1: float = Field(Settings.ADAM_BETA1, gt=0, lt=1)
    beta2: float = Field(Settings.ADAM_BETA2, gt=0, lt=1)
    epsilon: float = Field(Settings.ADAM_EPSILON, gt=0)
    anneal_factor: float = Field(Settings.ANNEAL_FACTOR, gt=0, le=1)
    anneal_every: int = Field(Settings.ANNEAL_EVERY, ge=1)


def annealed_lr(cfg: AdamConfig, epoch: int) -> float:
    """Learning rate for a 0-indexed epoch: lr · factor^(epoch // every)."""
    return cfg.lr * cfg.anneal_factor ** (epoch // cfg.anneal_every)


def adam_step(store: ParamStore, cfg: AdamConfig, lr: float | None = None) -> None:
    """Apply one bias-corrected ADAM update to every parameter in ``store``.

    Gradients are zeroed and the step counter incremented afterwards.

    Args:
        store: Parameters with populated gradients.
        cfg: Optimizer configuration.
        lr: Learning rate override (e.g. an annealed value); defaults to cfg.lr.

    Raises:
        NonFiniteError: If any gradient holds NaN/Inf; no parameter is touched.
    """
    for name, grad in store.grads.items():
        if not np.isfinite(grad).all():
            raise NonFiniteError(f"Non-finite gradient for parameter {name}")

    rate = cfg.lr if lr is None else lr
    store.step += 1
    bc1 = 1.0 - cfg.beta1**store.step
    bc2 = 1.0 - cfg.beta2**store.step
    step_size = rate / bc1

    for name, param in store.params.items():
        g = store.grads[name]
        m = store.first_moment[name]
        v = store.second_moment[name]
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * (g * g)
        param -= step_size * m / (np.sqrt(v / bc2) + cfg.epsilon)

    store.zero_grad()
