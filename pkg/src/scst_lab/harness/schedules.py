"""Per-epoch schedules of the training recipes (epochs are 0-indexed)."""

from ..diffcore.adam import AdamConfig, annealed_lr
from .types import RLConfig, TrainConfig


def feedback_prob(cfg: TrainConfig, epoch: int) -> float:
    """Scheduled-sampling probability: +increase every ``ss_every`` epochs, capped."""
    return min(cfg.ss_max, cfg.ss_increase * (epoch // cfg.ss_every))


def xe_adam(cfg: TrainConfig) -> AdamConfig:
    return AdamConfig(lr=cfg.xe_lr, anneal_factor=cfg.anneal_factor, anneal_every=cfg.anneal_every)


def xe_lr(cfg: TrainConfig, epoch: int) -> float:
    return annealed_lr(xe_adam(cfg), epoch)


def rl_adam(train: TrainConfig, rl: RLConfig) -> AdamConfig:
    return AdamConfig(
        lr=rl.rl_lr, anneal_factor=train.anneal_factor, anneal_every=train.anneal_every
    )


def rl_lr(train: TrainConfig, rl: RLConfig, epoch: int) -> float:
    """Fixed RL learning rate unless annealing is switched on."""
    return annealed_lr(rl_adam(train, rl), epoch) if rl.anneal else rl.rl_lr
