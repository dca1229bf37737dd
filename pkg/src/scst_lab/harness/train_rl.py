"""Policy-gradient fine-tuning of an XE checkpoint."""

import logging
from pathlib import Path

import numpy as np

from ..config.settings import Settings
from ..core import ExperimentStage
from ..diffcore.adam import AdamConfig, adam_step
from ..diffcore.tensor import Tensor
from ..exceptions import DivergenceError, LabError, NonFiniteError, TrainingError
from ..metrics.reward import RewardScorer
from ..metrics.types import MetricKind
from ..models.bptt import backprop_through_time
from ..models.captioner import Captioner, load_model, save_model
from ..models.rollout import sequence_lengths
from ..rl.baseline import LearnedBaseline
from ..rl.diagnostics import DiagnosticsRow, EpochDiagnostics
from ..rl.episode import collect_episode
from ..rl.estimators import estimator_grad, learned_baseline_update
from ..rl.exact import MAX_SUPPORT, estimator_bias, support_size
from ..rl.types import EpisodeBatch, EstimatorKind, MixerSchedule
from .dataset import SplitData, load_split
from .evaluate import evaluate_greedy, split_stats
from .reporting import write_csv
from .schedules import rl_adam, rl_lr
from .train_xe import batch_targets
from .types import RLConfig, TrainConfig
from .vocab import Vocab

logger = logging.getLogger(__name__)


def reward_scorer(split: SplitData, cfg: RLConfig, eos_id: int) -> RewardScorer:
    """Reward over a split's references, document frequencies frozen from the same split."""
    stats = split_stats(split, eos_id, cfg.include_eos)
    return RewardScorer(cfg.reward, split.references, stats, eos_id, cfg.include_eos)


class TrainRL(ExperimentStage[Path, Path]):
    """Fine-tune with one of the policy-gradient estimators.

    Args:
        data_dir: Dataset directory.
        run_dir: Output directory for the checkpoint and diagnostics CSV.
        train_cfg: Seed, batch size and annealing settings.
        rl_cfg: Estimator, reward and learning rate.
        progress_enabled: Whether to enable progress tracking.
    """

    def __init__(
        self,
        data_dir: Path,
        run_dir: Path,
        train_cfg: TrainConfig | None = None,
        rl_cfg: RLConfig | None = None,
        progress_enabled: bool = True,
    ) -> None:
        super().__init__(progress_enabled=progress_enabled)
        self.data_dir = data_dir
        self.run_dir = run_dir
        self.train_cfg = train_cfg or TrainConfig()
        self.rl_cfg = rl_cfg or RLConfig()
        self.log: list[DiagnosticsRow] = []

    @property
    def checkpoint_path(self) -> Path:
        return self.run_dir / Settings.RL_CHECKPOINT

    def process(self, data: Path) -> Path:
        """Fine-tune the XE checkpoint ``data``; returns the best RL checkpoint.

        Raises:
            DivergenceError: If a gradient becomes non-finite.
            TrainingError: If training fails for another reason.
        """
        kind = self.rl_cfg.estimator
        logger.info(
            f"Starting RL training ({kind.value}, reward {self.rl_cfg.reward.value}) from {data}"
        )
        try:
            model = load_model(data)
            model.store.reset_optimizer()
            vocab = Vocab.load(self.data_dir / Settings.VOCAB_FILE)
            if len(vocab) != model.cfg.vocab_size:
                raise TrainingError(
                    f"Checkpoint vocabulary {model.cfg.vocab_size} does not match "
                    f"dataset {len(vocab)}"
                )
            train = load_split(self.data_dir, "train", vocab)
            val = load_split(self.data_dir, "val", vocab)
            try:
                self._train(model, train, val)
            finally:
                if self.log:
                    write_csv(self.run_dir / Settings.RL_LOG_FILE, self.log)
            return self.checkpoint_path
        except LabError:
            raise
        except Exception as e:
            logger.error(f"RL training failed: {e!s}")
            raise TrainingError(f"RL training failed: {e!s}") from e

    def _train(self, model: Captioner, train: SplitData, val: SplitData) -> None:
        tcfg, rcfg = self.train_cfg, self.rl_cfg
        kind = rcfg.estimator
        adam = rl_adam(tcfg, rcfg)
        rng = np.random.default_rng(tcfg.seed + 2)
        T, eos = model.cfg.max_length, model.cfg.eos_id
        scorer = reward_scorer(train, rcfg, eos)
        val_stats = split_stats(val, eos)
        baseline = (
            LearnedBaseline(model.cfg.hidden, AdamConfig(lr=rcfg.baseline_lr))
            if kind.needs_learned_baseline
            else None
        )
        schedule = MixerSchedule(initial_rl_words=rcfg.mixer_initial_words, step=rcfg.mixer_step)
        n_batches = -(-len(train) // tcfg.batch_size)
        best = -np.inf

        def step(rows: np.ndarray, epoch: int, lr: float) -> tuple[EpisodeBatch, Tensor]:
            reward = scorer.bind(rows.tolist())
            refs: np.ndarray | None = None
            boundaries: np.ndarray | None = None
            if kind is EstimatorKind.MIXER:
                refs = batch_targets(train, rows, rng, T, eos)
                boundaries = schedule.boundaries(sequence_lengths(refs, eos), epoch, T)
            batch = collect_episode(
                model,
                train.features_for(model, rows),
                reward,
                rng,
                with_greedy=kind.needs_greedy,
                refs=refs,
                prefix_lengths=boundaries,
            )
            dlogits = estimator_grad(kind, batch, model, baseline, boundaries, rcfg.n_future)
            if baseline is not None:
                learned_baseline_update(batch, baseline)
            backprop_through_time(model, batch.sampled, dlogits)
            model.store.scale_grad(1.0 / len(rows))
            adam_step(model.store, adam, lr)
            return batch, dlogits

        for epoch in range(rcfg.rl_epochs):
            lr = rl_lr(tcfg, rcfg, epoch)
            order = rng.permutation(len(train))
            diag = EpochDiagnostics(kind.value)

            self.init_progress(n_batches, f"RL epoch {epoch} ({kind.value})")
            try:
                for start in range(0, len(train), tcfg.batch_size):
                    rows = order[start : start + tcfg.batch_size]
                    try:
                        batch, dlogits = step(rows, epoch, lr)
                    except NonFiniteError as e:
                        raise DivergenceError(
                            f"RL training diverged at epoch {epoch}: {e!s}"
                        ) from e
                    diag.add_batch(dlogits, batch.sampled, batch.rewards)
                    self.update_progress(reward=float(np.mean(batch.rewards)))
            finally:
                self.close_progress()

            scores = evaluate_greedy(model, val, val_stats)
            val_cider = scores[MetricKind.CIDER].corpus_score
            row = diag.summary(
                epoch,
                val_cider,
                scores[MetricKind.BLEU].corpus_score,
                scores[MetricKind.ROUGE].corpus_score,
                self._true_scst_bias(model, train, scorer),
            )
            self.log.append(row)
            logger.info(
                f"RL epoch {epoch}: reward {row.sampled_reward_mean:.4f}, "
                f"grad var {row.grad_variance_mean:.3e}, entropy {row.posterior_entropy_mean:.3f}, "
                f"val CIDEr-D {val_cider:.4f}, BLEU-4 {row.greedy_bleu4:.4f}, "
                f"ROUGE-L {row.greedy_rouge_l:.4f}"
            )
            if val_cider > best:
                best = val_cider
                save_model(model, self.checkpoint_path)
                logger.info(f"Saved best RL checkpoint (epoch {epoch}) to {self.checkpoint_path}")

    def _true_scst_bias(
        self, model: Captioner, train: SplitData, scorer: RewardScorer
    ) -> float | None:
        """Exact True-SCST bias on the first training example, when enumerable."""
        if self.rl_cfg.estimator is not EstimatorKind.TRUE_SCST:
            return None
        if support_size(model.cfg.vocab_size, model.cfg.max_length) > MAX_SUPPORT:
            return None
        bias = estimator_bias(
            model,
            train.features_for(model, [0]),
            lambda seqs: scorer.score(seqs, [0] * len(seqs)),
            EstimatorKind.TRUE_SCST,
            self.rl_cfg.n_future,
        )
        logger.debug(f"True-SCST bias {bias:.3e}")
        return bias
