"""
Custom exceptions for the SCST laboratory.
All exceptions inherit from base LabError class.
"""


class LabError(Exception):
    """Base exception class for laboratory errors."""

    pass


class DimensionError(LabError):
    """Raised when tensor shapes do not agree with an operation."""

    pass


class NonFiniteError(LabError):
    """Raised when a NaN or Inf value appears in a tensor or gradient."""

    pass


class ConfigError(LabError):
    """Raised when a model, training or decode configuration is invalid."""

    pass


class UsageError(LabError):
    """Raised when an operation is called outside its contract.

    This includes errors such as:
    - Teacher-forced rollout without references
    - SCST gradients without a greedy rollout
    - Logits gradients that do not match the rollout length
    - Ensembles over models with different vocabularies
    """

    pass


class InputError(LabError):
    """Raised when a token id lies outside the vocabulary."""

    pass


class CheckpointError(LabError):
    """Raised when a checkpoint cannot be written or read."""

    pass


class DatasetError(LabError):
    """Raised when dataset generation or loading fails."""

    pass


class TrainingError(LabError):
    """Raised when a training run fails."""

    pass


class DivergenceError(TrainingError):
    """Raised when the training loss becomes non-finite."""

    pass


class EvaluationError(LabError):
    """Raised when decoding or scoring a split fails."""

    pass


class ProgressError(LabError):
    """Raised when progress tracking operations fail.

    This includes errors such as:
    - Invalid progress bar initialization
    - Progress tracking state errors
    - Progress bar update failures
    """

    pass
