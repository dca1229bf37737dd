"""Experiment stages with optional tqdm progress, and a sequential pipeline."""

import logging
import time
from abc import ABC, abstractmethod
from typing import Any, Generic, TypeVar

from tqdm import tqdm

from .exceptions import ProgressError

logger = logging.getLogger(__name__)

T = TypeVar("T")
U = TypeVar("U")


class ExperimentStage(Generic[T, U], ABC):
    """One step of an experiment (data generation, training, evaluation).

    Subclasses implement ``process`` and may drive a progress bar over their
    batches or epochs. Bars are only created when ``progress_enabled`` is set,
    so the same stage runs silently in tests and under ``--no-progress``.

    Attributes:
        progress_enabled: Whether ``init_progress`` opens a tqdm bar.
        _progress_bar: The open bar, if any.
    """

    def __init__(self, progress_enabled: bool = True) -> None:
        self.progress_enabled = progress_enabled
        self._progress_bar: tqdm[Any] | None = None

    @property
    def name(self) -> str:
        return type(self).__name__

    def init_progress(self, total: int, desc: str) -> None:
        """Open a bar of ``total`` steps labelled ``desc``.

        Raises:
            ValueError: If total is negative.
            ProgressError: If tqdm cannot create the bar.
        """
        if total < 0:
            raise ValueError("Total must be non-negative")
        if not self.progress_enabled:
            return
        try:
            self._progress_bar = tqdm(total=total, desc=desc)  # type: ignore
        except Exception as e:
            raise ProgressError(f"Failed to initialize progress bar: {e!s}") from e

    def update_progress(self, n: int = 1, **postfix: float) -> None:
        """Advance the bar by ``n`` and show running values such as loss or reward.

        Raises:
            ValueError: If n is negative.
            ProgressError: If the bar cannot be updated.
        """
        if n < 0:
            raise ValueError("Progress update value must be non-negative")
        if self._progress_bar is None:
            return
        try:
            if postfix:
                self._progress_bar.set_postfix(postfix, refresh=False)
            self._progress_bar.update(n)
        except Exception as e:
            raise ProgressError(f"Failed to update progress: {e!s}") from e

    def close_progress(self) -> None:
        """Close the open bar; call from a ``finally`` block."""
        if self._progress_bar is None:
            return
        try:
            self._progress_bar.close()
        except Exception as e:
            raise ProgressError(f"Failed to close progress bar: {e!s}") from e
        finally:
            self._progress_bar = None

    @abstractmethod
    def process(self, data: T) -> U:
        """Run the stage.

        Raises:
            LabError: If the stage fails.
        """


class ExperimentPipeline:
    """Runs stages in order, feeding each stage's output to the next."""

    def __init__(self, stages: list[ExperimentStage[Any, Any]]) -> None:
        if not stages:
            raise ValueError("Pipeline must contain at least one stage")
        self.stages = stages

    def run(self, input_data: Any) -> Any:
        result = input_data
        for i, stage in enumerate(self.stages, start=1):
            logger.info(f"Stage {i}/{len(self.stages)}: {stage.name}")
            started = time.perf_counter()
            result = stage.process(result)
            logger.info(f"{stage.name} finished in {time.perf_counter() - started:.1f}s")
        return result
