"""
Type definitions for test-time decoding.
"""

from dataclasses import dataclass, field

from pydantic import BaseModel, Field

from ..config.settings import Settings


class BeamConfig(BaseModel):
    """Beam search settings.

    ``prune_margin`` may be ``inf`` to disable log-prob pruning; a
    ``max_length`` of None uses the decoder's own T.
    """

    width: int = Field(Settings.BEAM_WIDTH, ge=1)
    prune_margin: float = Field(Settings.PRUNE_MARGIN, gt=0)
    max_length: int | None = Field(None, ge=1)


@dataclass(frozen=True)
class Hypothesis:
    """A (partial or finished) decoded sequence.

    Attributes:
        tokens: Words so far, including a final EOS if one was emitted.
        logprob: Cumulative log-probability of ``tokens``.
        step_logprobs: Per-word log-probabilities.
        finished: Emitted EOS or reached the length cap.
        row: Batch row of the decoder state that produced the last word.
    """

    tokens: tuple[int, ...] = ()
    logprob: float = 0.0
    step_logprobs: tuple[float, ...] = field(default=(), repr=False)
    finished: bool = False
    row: int = 0

    @property
    def mean_token_logprob(self) -> float:
        return self.logprob / len(self.tokens) if self.tokens else 0.0

    def extend(self, token: int, logprob: float, row: int, finished: bool) -> "Hypothesis":
        return Hypothesis(
            tokens=(*self.tokens, token),
            logprob=self.logprob + logprob,
            step_logprobs=(*self.step_logprobs, logprob),
            finished=finished,
            row=row,
        )
