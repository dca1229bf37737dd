"""LSTM captioners: FC, Att2in and Att2all.

All three share one maxout LSTM cell::

    i, f, o = σ(W_x x + W_h h + b_g [+ W_gI I_t])      (gates, stacked)
    c_t     = i ⊙ maxout2(W_zx x + W_zh h + b_z [+ W_zI I_t]) + f ⊙ c_{t-1}
    h_t     = o ⊙ tanh(c_t)
    s_t     = W_s h_t [+ W_sI I_t]

FC feeds the projected image ``W_I feature`` as the first input and has no
attention. The attention models feed ``E[BOS]`` first and compute ``I_t``
from the spatial features; Att2in couples it through ``W_zI`` only, Att2all
also through ``W_gI`` and ``W_sI``.

Arrays carry a leading batch axis; the model holds no per-example state.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..diffcore import ops
from ..diffcore.checkpoint import load_checkpoint, save_checkpoint
from ..diffcore.params import ParamStore
from ..diffcore.tensor import Tensor, TokenArray
from ..exceptions import CheckpointError, ConfigError, DimensionError, InputError
from .types import Architecture, ModelConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StepState:
    """Decoder state between steps.

    ``feats`` holds the global feature (B, F) for FC and the location
    features (B, N, F) for attention models; ``proj`` caches ``I_i W_aI``.
    """

    h: Tensor
    c: Tensor
    feats: Tensor
    proj: Tensor | None = None
    alpha: Tensor | None = None

    @property
    def batch_size(self) -> int:
        return int(self.h.shape[0])

    def select(self, rows: TokenArray) -> "StepState":
        """Reorder/replicate batch rows (beam search bookkeeping)."""
        return StepState(
            h=self.h[rows],
            c=self.c[rows],
            feats=self.feats[rows],
            proj=None if self.proj is None else self.proj[rows],
            alpha=None if self.alpha is None else self.alpha[rows],
        )


@dataclass(frozen=True)
class StepCache:
    """Forward intermediates of one step, consumed by :meth:`Captioner.step_backward`."""

    tokens: TokenArray | None  # None on the FC image step
    x: Tensor
    h_prev: Tensor
    c_prev: Tensor
    gates: Tensor  # σ outputs, columns [i | f | o]
    z: Tensor  # pre-maxout cell candidate
    zc: Tensor
    tc: Tensor  # tanh(c_t)
    h: Tensor
    feats: Tensor
    proj: Tensor | None
    att_pre: Tensor | None
    alpha: Tensor | None
    att_feat: Tensor | None  # I_t


class Captioner:
    """One recurrent captioner over a :class:`ParamStore`.

    Args:
        cfg: Model dimensions and architecture.
        store: Existing parameters (e.g. from a checkpoint); initialized when None.
        rng: Generator for weight initialization.

    Raises:
        ConfigError: If an attention model has no locations or the store is
            missing parameters.
    """

    def __init__(
        self,
        cfg: ModelConfig,
        store: ParamStore | None = None,
        rng: np.random.Generator | None = None,
    ) -> None:
        if cfg.architecture.attends and cfg.n_locations < 1:
            raise ConfigError("Attention models need at least one location (N >= 1)")
        self.cfg = cfg
        self.arch = cfg.architecture
        if store is None:
            store = self._init_params(rng or np.random.default_rng(0))
        missing = set(self.param_shapes()) - set(store)
        if missing:
            raise ConfigError(f"Parameter store lacks {sorted(missing)}")
        self.store = store

    # ------------------------------------------------------------------ params

    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        """Canonical parameter names and shapes for this architecture."""
        V, H, F = self.cfg.vocab_size, self.cfg.hidden, self.cfg.feature_dim
        shapes: dict[str, tuple[int, ...]] = {
            "E": (V, H),
            "W_x": (H, 3 * H),
            "W_h": (H, 3 * H),
            "b_g": (3 * H,),
            "W_zx": (H, 2 * H),
            "W_zh": (H, 2 * H),
            "b_z": (2 * H,),
            "W_s": (H, V),
        }
        if self.arch is Architecture.FC:
            shapes["W_I"] = (F, H)
            return shapes
        shapes |= {
            "W_aI": (F, H),
            "W_ah": (H, H),
            "b_a": (H,),
            "w_a": (H, 1),
            "b_alpha": (self.cfg.n_locations,),
            "W_zI": (F, 2 * H),
        }
        if self.arch is Architecture.ATT2ALL:
            shapes |= {"W_gI": (F, 3 * H), "W_sI": (F, V)}
        return shapes

    def _init_params(self, rng: np.random.Generator) -> ParamStore:
        store = ParamStore()
        scale = self.cfg.init_scale
        for name, shape in self.param_shapes().items():
            if name.startswith("b_"):
                store.add(name, np.zeros(shape))
            else:
                store.add(name, rng.uniform(-scale, scale, size=shape))
        logger.debug(
            f"Initialized {self.arch.value} captioner with "
            f"{store.num_parameters()} parameters"
        )
        return store

    # ------------------------------------------------------------------ state

    def initial_state(self, features: Tensor) -> StepState:
        """h_0 = c_0 = 0; attention models also cache ``I_i W_aI``.

        Raises:
            DimensionError: If ``features`` does not fit the architecture.
        """
        F = self.cfg.feature_dim
        if self.arch.attends:
            expected = (self.cfg.n_locations, F)
            if features.ndim != 3 or features.shape[1:] != expected:  # noqa: PLR2004
                raise DimensionError(
                    f"Attention features must be (B, {expected[0]}, {F}), "
                    f"got {features.shape}"
                )
        elif features.ndim != 2 or features.shape[1] != F:  # noqa: PLR2004
            raise DimensionError(f"FC features must be (B, {F}), got {features.shape}")

        B, H = features.shape[0], self.cfg.hidden
        proj = ops.matmul(features, self.store["W_aI"]) if self.arch.attends else None
        return StepState(h=np.zeros((B, H)), c=np.zeros((B, H)), feats=features, proj=proj)

    def select_features(self, global_feats: Tensor, spatial_feats: Tensor) -> Tensor:
        """Pick the feature view this architecture consumes."""
        return spatial_feats if self.arch.attends else global_feats

    def _check_tokens(self, tokens: TokenArray) -> None:
        if tokens.size and (tokens.min() < 0 or tokens.max() >= self.cfg.vocab_size):
            raise InputError(
                f"Token id out of vocabulary [0, {self.cfg.vocab_size}): "
                f"{tokens.min()}..{tokens.max()}"
            )

    # ---------------------------------------------------------------- forward

    def step(
        self, state: StepState, prev_tokens: TokenArray | None
    ) -> tuple[Tensor, StepState, StepCache]:
        """Advance one timestep.

        Args:
            state: State after the previous step.
            prev_tokens: Previous tokens (B,), or None for the first step
                (image embedding for FC, BOS for attention models).

        Returns:
            Logits s_t (B, V), the new state and the backward cache.
        """
        p = self.store.params
        H = self.cfg.hidden
        B = state.batch_size

        tokens: TokenArray | None
        if prev_tokens is None and self.arch is Architecture.FC:
            tokens = None
            x = ops.matmul(state.feats, p["W_I"])
        else:
            if prev_tokens is None:
                tokens = np.full(B, self.cfg.bos_id, dtype=np.int64)
            else:
                tokens = np.asarray(prev_tokens, dtype=np.int64)
                self._check_tokens(tokens)
            x = p["E"][tokens]

        att_pre = alpha = att_feat = None
        if self.arch.attends:
            assert state.proj is not None
            q = ops.matmul(state.h, p["W_ah"]) + p["b_a"]
            att_pre = ops.tanh(state.proj + q[:, None, :])
            scores = ops.matmul(att_pre, p["w_a"])[..., 0] + p["b_alpha"]
            alpha = ops.softmax(scores)
            att_feat = np.einsum("bn,bnf->bf", alpha, state.feats)

        gate_pre = ops.matmul(x, p["W_x"]) + ops.matmul(state.h, p["W_h"]) + p["b_g"]
        z = ops.matmul(x, p["W_zx"]) + ops.matmul(state.h, p["W_zh"]) + p["b_z"]
        if att_feat is not None:
            z = z + ops.matmul(att_feat, p["W_zI"])
            if self.arch is Architecture.ATT2ALL:
                gate_pre = gate_pre + ops.matmul(att_feat, p["W_gI"])

        gates = ops.sigmoid(gate_pre)
        i, f, o = gates[:, :H], gates[:, H : 2 * H], gates[:, 2 * H :]
        zc = ops.maxout2(z)
        c = ops.hadamard(i, zc) + ops.hadamard(f, state.c)
        tc = ops.tanh(c)
        h = ops.hadamard(o, tc)

        logits = ops.matmul(h, p["W_s"])
        if self.arch is Architecture.ATT2ALL:
            assert att_feat is not None
            logits = logits + ops.matmul(att_feat, p["W_sI"])

        new_state = StepState(h=h, c=c, feats=state.feats, proj=state.proj, alpha=alpha)
        cache = StepCache(
            tokens=tokens,
            x=x,
            h_prev=state.h,
            c_prev=state.c,
            gates=gates,
            z=z,
            zc=zc,
            tc=tc,
            h=h,
            feats=state.feats,
            proj=state.proj,
            att_pre=att_pre,
            alpha=alpha,
            att_feat=att_feat,
        )
        return logits, new_state, cache

    # --------------------------------------------------------------- backward

    def step_backward(
        self, cache: StepCache, dlogits: Tensor, dh_next: Tensor, dc_next: Tensor
    ) -> tuple[Tensor, Tensor]:
        """Backward through one step, accumulating parameter gradients.

        Args:
            cache: Forward cache of the step.
            dlogits: ∂L/∂s_t (B, V).
            dh_next: ∂L/∂h_t arriving from step t+1.
            dc_next: ∂L/∂c_t arriving from step t+1.

        Returns:
            (∂L/∂h_{t-1}, ∂L/∂c_{t-1}).
        """
        p = self.store.params
        acc = self.store.accumulate
        H = self.cfg.hidden

        dh, dW_s = ops.matmul_backward(cache.h, p["W_s"], dlogits)
        acc("W_s", dW_s)
        dh = dh + dh_next

        datt: Tensor | None = None
        if self.arch is Architecture.ATT2ALL:
            assert cache.att_feat is not None
            datt, dW_sI = ops.matmul_backward(cache.att_feat, p["W_sI"], dlogits)
            acc("W_sI", dW_sI)

        i, f, o = cache.gates[:, :H], cache.gates[:, H : 2 * H], cache.gates[:, 2 * H :]
        do, dtc = ops.hadamard_backward(o, cache.tc, dh)
        dc = dc_next + ops.tanh_backward(cache.tc, dtc)
        di, dzc = ops.hadamard_backward(i, cache.zc, dc)
        df, dc_prev = ops.hadamard_backward(f, cache.c_prev, dc)
        dz = ops.maxout2_backward(cache.z, dzc)
        dgate = ops.sigmoid_backward(cache.gates, np.concatenate([di, df, do], axis=1))

        acc("b_g", dgate.sum(axis=0))
        acc("b_z", dz.sum(axis=0))
        dx_g, dW_x = ops.matmul_backward(cache.x, p["W_x"], dgate)
        dhp_g, dW_h = ops.matmul_backward(cache.h_prev, p["W_h"], dgate)
        dx_z, dW_zx = ops.matmul_backward(cache.x, p["W_zx"], dz)
        dhp_z, dW_zh = ops.matmul_backward(cache.h_prev, p["W_zh"], dz)
        acc("W_x", dW_x)
        acc("W_h", dW_h)
        acc("W_zx", dW_zx)
        acc("W_zh", dW_zh)
        dx = dx_g + dx_z
        dh_prev = dhp_g + dhp_z

        if self.arch.attends:
            assert cache.att_feat is not None
            datt_z, dW_zI = ops.matmul_backward(cache.att_feat, p["W_zI"], dz)
            acc("W_zI", dW_zI)
            datt = datt_z if datt is None else datt + datt_z
            if self.arch is Architecture.ATT2ALL:
                datt_g, dW_gI = ops.matmul_backward(cache.att_feat, p["W_gI"], dgate)
                acc("W_gI", dW_gI)
                datt = datt + datt_g
            dh_prev = dh_prev + self._attention_backward(cache, datt)

        if cache.tokens is None:
            _, dW_I = ops.matmul_backward(cache.feats, p["W_I"], dx)
            acc("W_I", dW_I)
        else:
            dE = np.zeros_like(p["E"])
            np.add.at(dE, cache.tokens, dx)
            acc("E", dE)

        return dh_prev, dc_prev

    def _attention_backward(self, cache: StepCache, datt: Tensor) -> Tensor:
        """Backward through I_t = Σ α_i I_i; returns the h_{t-1} contribution."""
        p = self.store.params
        acc = self.store.accumulate
        assert cache.alpha is not None and cache.att_pre is not None

        dalpha = np.einsum("bnf,bf->bn", cache.feats, datt)
        dscores = ops.softmax_backward(cache.alpha, dalpha)
        acc("b_alpha", dscores.sum(axis=0))
        datt_pre, dw_a = ops.matmul_backward(cache.att_pre, p["w_a"], dscores[..., None])
        acc("w_a", dw_a)
        dpre = ops.tanh_backward(cache.att_pre, datt_pre)
        acc("b_a", dpre.sum(axis=(0, 1)))
        _, dW_aI = ops.matmul_backward(cache.feats, p["W_aI"], dpre)
        acc("W_aI", dW_aI)
        dh_prev, dW_ah = ops.matmul_backward(cache.h_prev, p["W_ah"], dpre.sum(axis=1))
        acc("W_ah", dW_ah)
        return dh_prev


# -------------------------------------------------------------- persistence


def save_model(model: Captioner, path: Path) -> None:
    """Write parameters, ADAM state and config to a checkpoint file."""
    save_checkpoint(path, model.store, model.arch.value, model.cfg.model_dump_json())


def load_model(path: Path) -> Captioner:
    """Rebuild a captioner from a checkpoint; the kind tag selects the architecture.

    Raises:
        CheckpointError: If the header and stored config disagree.
    """
    payload = load_checkpoint(path)
    try:
        cfg = ModelConfig.model_validate(json.loads(payload.config_json))
    except ValueError as e:
        raise CheckpointError(f"Invalid model config in {path}: {e!s}") from e
    if cfg.architecture.value != payload.kind:
        raise CheckpointError(
            f"Checkpoint kind {payload.kind!r} disagrees with config "
            f"{cfg.architecture.value!r}"
        )
    try:
        return Captioner(cfg, store=payload.store)
    except ConfigError as e:
        raise CheckpointError(f"Checkpoint {path} does not fit its config: {e!s}") from e


def with_config(model: Captioner, **changes: object) -> Captioner:
    """Share ``model``'s parameters under a modified config (e.g. max_length)."""
    cfg = ModelConfig.model_validate(model.cfg.model_dump() | changes)
    return Captioner(cfg, store=model.store)
