"""Ensemble decoding by averaging member word posteriors."""

from collections.abc import Sequence

from ..diffcore.tensor import Tensor
from ..models.captioner import Captioner
from .search import beam_search, greedy_decode
from .types import BeamConfig, Hypothesis


def ensemble_decode(
    models: Sequence[Captioner], features: Sequence[Tensor], cfg: BeamConfig
) -> list[list[Hypothesis]]:
    """Greedy (width 1) or beam decode with the members' mean posterior.

    Args:
        models: Members sharing vocabulary, EOS id and length cap.
        features: One feature view per member (see ``member_features``).
        cfg: Search settings.

    Raises:
        UsageError: If the members are incompatible.
    """
    if cfg.width == 1:
        return [[h] for h in greedy_decode(list(models), features, cfg.max_length)]
    return beam_search(list(models), features, cfg)
