"""Unrolling a captioner: teacher-forced, scheduled, sampled, greedy, mixer.

A rollout runs a batch forward until every example has emitted EOS or the
length cap T is reached. Steps after an example's first EOS are still
computed (the batch moves in lockstep) but are masked out everywhere.
"""

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from ..diffcore import ops
from ..diffcore.tensor import Tensor, TokenArray
from ..exceptions import UsageError
from .captioner import Captioner, StepCache, StepState
from .types import Feedback, RolloutMode


@dataclass
class RolloutRecord:
    """Everything a gradient estimator needs from one batched rollout.

    Shapes use B examples, S realized steps (S ≤ T) and V words.

    Attributes:
        tokens: Chosen word per step (B, S); the target word under teacher
            forcing, the model's word otherwise.
        inputs: Word fed into each step (None for the first step).
        logprobs: log p(tokens[t] | h_t) (B, S); all ≤ 0.
        posteriors: Full word posteriors (B, S, V).
        logits: s_t (B, S, V).
        hiddens: h_t (B, S, H).
        mask: 1.0 up to and including the first EOS (or T), else 0.0 (B, S).
        lengths: Realized length of each sequence (B,).
        states: Decoder state entering each step, plus the final state (S + 1).
        caches: Per-step backward caches (S).
    """

    mode: RolloutMode
    tokens: TokenArray
    inputs: list[TokenArray | None]
    logprobs: Tensor
    posteriors: Tensor
    logits: Tensor
    hiddens: Tensor
    mask: Tensor
    lengths: TokenArray
    states: list[StepState] = field(repr=False)
    caches: list[StepCache] = field(repr=False)

    @property
    def batch_size(self) -> int:
        return int(self.tokens.shape[0])

    @property
    def steps(self) -> int:
        return int(self.tokens.shape[1])

    def sequences(self) -> list[list[int]]:
        """Per-example token lists truncated after the first EOS."""
        return [
            [int(w) for w in row[:length]]
            for row, length in zip(self.tokens, self.lengths, strict=True)
        ]

    def sequence_logprob(self) -> Tensor:
        """log p(w) of each realized sequence (B,)."""
        return (self.logprobs * self.mask).sum(axis=1)


def pad_sequences(seqs: Sequence[Sequence[int]], max_length: int, eos_id: int) -> TokenArray:
    """Pack token lists into a (B, max_length) array padded with EOS.

    Sequences longer than ``max_length`` are truncated (and then lack EOS).
    """
    out = np.full((len(seqs), max_length), eos_id, dtype=np.int64)
    for row, seq in enumerate(seqs):
        clipped = list(seq)[:max_length]
        out[row, : len(clipped)] = clipped
    return out


def sequence_lengths(tokens: TokenArray, eos_id: int) -> TokenArray:
    """Length through the first EOS of each row, or the row width if none."""
    is_eos = tokens == eos_id
    first = is_eos.argmax(axis=1) + 1
    return np.where(is_eos.any(axis=1), first, tokens.shape[1]).astype(np.int64)


def sample_tokens(posteriors: Tensor, rng: np.random.Generator) -> TokenArray:
    """One categorical draw per row by inverse CDF (one uniform per row)."""
    u = rng.random(posteriors.shape[0])
    cdf = np.cumsum(posteriors, axis=1)
    tokens = (cdf < u[:, None]).sum(axis=1)
    return np.minimum(tokens, posteriors.shape[1] - 1).astype(np.int64)


def greedy_tokens(logprobs: Tensor) -> TokenArray:
    """Argmax per row; ties go to the lowest token id."""
    return logprobs.argmax(axis=1).astype(np.int64)


def rollout(
    model: Captioner,
    features: Tensor,
    mode: RolloutMode,
    refs: TokenArray | None = None,
    feedback_prob: float = 0.0,
    rng: np.random.Generator | None = None,
    feedback: Feedback = Feedback.SAMPLE,
    prefix_lengths: TokenArray | None = None,
) -> RolloutRecord:
    """Unroll ``model`` over a batch of features.

    Args:
        model: Captioner to run.
        features: Global (B, F) or spatial (B, N, F) features.
        mode: Rollout mode.
        refs: Ground-truth tokens (B, L) padded with EOS; required for the
            teacher, scheduled and mixer modes.
        feedback_prob: Scheduled-sampling probability of feeding back a model
            word instead of the ground truth (per step, per example).
        rng: Random generator for sampling; required by scheduled, sampled and
            mixer modes.
        feedback: Feed back a posterior sample or the argmax word.
        prefix_lengths: Mixer mode: number of leading ground-truth words per
            example; clamped to [0, T].

    Raises:
        UsageError: On missing references or generator for the chosen mode.
    """
    cfg = model.cfg
    T, eos = cfg.max_length, cfg.eos_id
    forced = mode in (RolloutMode.TEACHER, RolloutMode.SCHEDULED, RolloutMode.MIXER)
    if forced and refs is None:
        raise UsageError(f"{mode.value} rollout requires reference tokens")
    if mode in (RolloutMode.SCHEDULED, RolloutMode.SAMPLED, RolloutMode.MIXER) and rng is None:
        raise UsageError(f"{mode.value} rollout requires a random generator")
    if not 0.0 <= feedback_prob <= 1.0:
        raise UsageError(f"Feedback probability must lie in [0, 1], got {feedback_prob}")

    state = model.initial_state(features)
    B = state.batch_size

    targets: TokenArray | None = None
    target_len: TokenArray | None = None
    if refs is not None:
        if refs.shape[0] != B:
            raise UsageError(f"{refs.shape[0]} reference rows for {B} examples")
        targets = pad_sequences(refs.tolist(), T, eos)
        target_len = sequence_lengths(targets, eos)

    prefix: TokenArray | None = None
    if mode is RolloutMode.MIXER:
        raw = np.zeros(B, dtype=np.int64) if prefix_lengths is None else prefix_lengths
        prefix = np.clip(np.asarray(raw, dtype=np.int64), 0, T)

    tokens_l: list[TokenArray] = []
    inputs: list[TokenArray | None] = []
    logp_l: list[Tensor] = []
    post_l: list[Tensor] = []
    logit_l: list[Tensor] = []
    hid_l: list[Tensor] = []
    states: list[StepState] = []
    caches: list[StepCache] = []

    finished = np.zeros(B, dtype=bool)
    prev: TokenArray | None = None
    for t in range(T):
        if mode in (RolloutMode.TEACHER, RolloutMode.SCHEDULED):
            assert target_len is not None
            if (target_len <= t).all():
                break
        elif finished.all():
            break

        states.append(state)
        inputs.append(prev)
        logits, state, cache = model.step(state, prev)
        logp = ops.log_softmax(logits)
        post = np.exp(logp)

        if mode is RolloutMode.GREEDY:
            chosen = greedy_tokens(logp)
        elif mode is RolloutMode.SAMPLED:
            assert rng is not None
            chosen = sample_tokens(post, rng)
        elif mode is RolloutMode.MIXER:
            assert rng is not None and targets is not None and prefix is not None
            drawn = sample_tokens(post, rng)
            chosen = np.where(t < prefix, targets[:, t], drawn)
        else:
            assert targets is not None
            chosen = targets[:, t].copy()

        fed = chosen
        if mode is RolloutMode.SCHEDULED:
            assert rng is not None
            use_model = rng.random(B) < feedback_prob
            model_word = (
                sample_tokens(post, rng) if feedback is Feedback.SAMPLE else greedy_tokens(logp)
            )
            fed = np.where(use_model, model_word, chosen)

        chosen = np.where(finished, eos, chosen)
        tokens_l.append(chosen)
        logp_l.append(np.take_along_axis(logp, chosen[:, None], axis=1)[:, 0])
        post_l.append(post)
        logit_l.append(logits)
        hid_l.append(state.h)
        caches.append(cache)
        finished |= chosen == eos
        prev = fed
    states.append(state)

    S = len(tokens_l)
    if S == 0:
        raise UsageError("Rollout produced no steps (empty references?)")
    tokens = np.stack(tokens_l, axis=1)
    if forced and mode is not RolloutMode.MIXER:
        assert target_len is not None
        lengths = np.minimum(target_len, S)
    else:
        lengths = sequence_lengths(tokens, eos)
    mask = (np.arange(S)[None, :] < lengths[:, None]).astype(np.float64)

    return RolloutRecord(
        mode=mode,
        tokens=tokens,
        inputs=inputs,
        logprobs=np.stack(logp_l, axis=1),
        posteriors=np.stack(post_l, axis=1),
        logits=np.stack(logit_l, axis=1),
        hiddens=np.stack(hid_l, axis=1),
        mask=mask,
        lengths=lengths,
        states=states,
        caches=caches,
    )


def complete_greedy(model: Captioner, record: RolloutRecord, start: int) -> list[list[int]]:
    """Keep each example's first ``start`` words, then finish greedily.

    Reuses the decoder state cached at step ``start`` of ``record``, so the
    continuation equals a fresh greedy decode conditioned on that prefix.
    Examples whose sequence already ends before ``start`` come back unchanged.

    Returns:
        Per-example token lists truncated after the first EOS (or at T).
    """
    if not 0 <= start <= record.steps:
        raise UsageError(f"Completion start {start} outside [0, {record.steps}]")
    T, eos = model.cfg.max_length, model.cfg.eos_id
    sequences = record.sequences()
    active = record.lengths > start
    if start >= T or not active.any():
        return sequences

    state = record.states[start]
    prev = record.inputs[start] if start < record.steps else record.tokens[:, start - 1]
    done = ~active
    tails: list[list[int]] = [[] for _ in range(record.batch_size)]
    for _ in range(start, T):
        logits, state, _ = model.step(state, prev)
        chosen = greedy_tokens(ops.log_softmax(logits))
        for b in np.flatnonzero(~done):
            tails[b].append(int(chosen[b]))
        done |= chosen == eos
        if done.all():
            break
        prev = chosen

    return [
        seq if not active[b] else [int(w) for w in record.tokens[b, :start]] + tails[b]
        for b, seq in enumerate(sequences)
    ]


def xe_loss_and_grad(record: RolloutRecord) -> tuple[float, Tensor]:
    """Masked cross-entropy −Σ_t log p(w*_t) and its logits gradient.

    ∂L/∂s_t = p_θ(·|h_t) − 1_{w*_t} on realized steps, zero elsewhere.
    """
    loss = float(-(record.logprobs * record.mask).sum())
    onehot = np.zeros_like(record.posteriors)
    np.put_along_axis(onehot, record.tokens[:, :, None], 1.0, axis=2)
    grad = (record.posteriors - onehot) * record.mask[:, :, None]
    return loss, grad
