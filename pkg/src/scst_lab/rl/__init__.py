"""Policy-gradient estimators, learned baseline and diagnostics."""

from .baseline import LearnedBaseline
from .diagnostics import (
    DiagnosticsRow,
    EpochDiagnostics,
    estimator_diagnostics,
    gradient_variance,
    posterior_entropy,
)
from .episode import collect_episode
from .estimators import (
    estimator_grad,
    learned_baseline_grad,
    learned_baseline_update,
    mixer_grad,
    policy_grad,
    reinforce_grad,
    scst_grad,
    score_function_grad,
    td_scst_grad,
    true_scst_grad,
)
from .exact import (
    enumerate_sequences,
    enumerated_batch,
    estimator_bias,
    expected_gradient,
    support_size,
)
from .types import EpisodeBatch, EstimatorKind, MixerSchedule

__all__ = [
    "DiagnosticsRow",
    "EpisodeBatch",
    "EpochDiagnostics",
    "EstimatorKind",
    "LearnedBaseline",
    "MixerSchedule",
    "collect_episode",
    "enumerate_sequences",
    "enumerated_batch",
    "estimator_bias",
    "estimator_diagnostics",
    "estimator_grad",
    "expected_gradient",
    "gradient_variance",
    "learned_baseline_grad",
    "learned_baseline_update",
    "mixer_grad",
    "policy_grad",
    "posterior_entropy",
    "reinforce_grad",
    "score_function_grad",
    "scst_grad",
    "support_size",
    "td_scst_grad",
    "true_scst_grad",
]
