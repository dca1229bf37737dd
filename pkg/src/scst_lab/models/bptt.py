"""Backpropagation through time from per-step logits gradients."""

import numpy as np

from ..diffcore.tensor import Tensor
from ..exceptions import UsageError
from .captioner import Captioner
from .rollout import RolloutRecord


def backprop_through_time(model: Captioner, record: RolloutRecord, dlogits: Tensor) -> None:
    """Accumulate ∇θ = Σ_t ∂L/∂s_t · ∂s_t/∂θ into ``model.store`` grads.

    Gradients on steps past an example's first EOS are ignored. Callers zero
    the gradients between minibatches.

    Args:
        model: The captioner that produced ``record``.
        record: Rollout whose caches are replayed in reverse.
        dlogits: ∂L/∂s_t for every realized step, shape (B, S, V).

    Raises:
        UsageError: If ``dlogits`` does not cover exactly the rollout's steps.
    """
    expected = record.posteriors.shape
    if dlogits.shape != expected:
        raise UsageError(
            f"Logits gradient shape {dlogits.shape} does not match rollout {expected}"
        )
    masked = dlogits * record.mask[:, :, None]

    B, H = record.batch_size, model.cfg.hidden
    dh = np.zeros((B, H))
    dc = np.zeros((B, H))
    for t in reversed(range(record.steps)):
        dh, dc = model.step_backward(record.caches[t], masked[:, t], dh, dc)
