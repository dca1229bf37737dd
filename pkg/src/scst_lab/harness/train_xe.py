"""Cross-entropy pretraining with scheduled sampling."""

import logging
from pathlib import Path

import numpy as np

from ..config.settings import Settings
from ..core import ExperimentStage
from ..diffcore.adam import AdamConfig, adam_step
from ..exceptions import DivergenceError, LabError, NonFiniteError, TrainingError
from ..metrics.types import MetricKind
from ..models.bptt import backprop_through_time
from ..models.captioner import Captioner, save_model
from ..models.rollout import pad_sequences, rollout, xe_loss_and_grad
from ..models.types import ModelConfig, RolloutMode
from .dataset import SplitData, load_split
from .evaluate import evaluate_greedy, split_stats
from .reporting import write_csv
from .schedules import feedback_prob, xe_adam, xe_lr
from .types import ModelSpec, TrainConfig, XELogRow
from .vocab import Vocab

logger = logging.getLogger(__name__)


def build_model(spec: ModelSpec, vocab_size: int, split: SplitData, seed: int) -> Captioner:
    cfg = ModelConfig(
        architecture=spec.architecture,
        vocab_size=vocab_size,
        hidden=spec.hidden,
        feature_dim=split.feature_dim,
        n_locations=split.n_locations,
        max_length=spec.max_length,
        init_scale=spec.init_scale,
    )
    return Captioner(cfg, rng=np.random.default_rng(seed))


def batch_targets(
    split: SplitData, rows: np.ndarray, rng: np.random.Generator, max_length: int, eos_id: int
) -> np.ndarray:
    """One randomly chosen reference per example, padded with EOS."""
    refs = [split.references[r][rng.integers(len(split.references[r]))] for r in rows]
    return pad_sequences(refs, max_length, eos_id)


def dataset_xe_loss(
    model: Captioner, split: SplitData, batch_size: int = Settings.BATCH_SIZE
) -> float:
    """Mean per-word XE of the first reference of every example, teacher forced."""
    T, eos = model.cfg.max_length, model.cfg.eos_id
    total = words = 0.0
    for start in range(0, len(split), batch_size):
        rows = np.arange(start, min(start + batch_size, len(split)))
        refs = pad_sequences([split.references[r][0] for r in rows], T, eos)
        record = rollout(model, split.features_for(model, rows), RolloutMode.TEACHER, refs=refs)
        loss, _ = xe_loss_and_grad(record)
        total += loss
        words += float(record.mask.sum())
    return total / max(words, 1.0)


class TrainXE(ExperimentStage[Path, Path]):
    """Train a captioner by XE and keep the best-validation-CIDEr checkpoint.

    Args:
        run_dir: Output directory for the checkpoint and the epoch log.
        spec: Architecture and sizes.
        cfg: XE recipe.
        progress_enabled: Whether to enable progress tracking.
    """

    def __init__(
        self,
        run_dir: Path,
        spec: ModelSpec | None = None,
        cfg: TrainConfig | None = None,
        progress_enabled: bool = True,
    ) -> None:
        super().__init__(progress_enabled=progress_enabled)
        self.run_dir = run_dir
        self.spec = spec or ModelSpec()
        self.cfg = cfg or TrainConfig()
        self.log: list[XELogRow] = []

    @property
    def checkpoint_path(self) -> Path:
        return self.run_dir / Settings.XE_CHECKPOINT

    def process(self, data: Path) -> Path:
        """Train on the dataset in ``data`` and return the best checkpoint path.

        Raises:
            DivergenceError: If the loss or a gradient becomes non-finite.
            TrainingError: If training fails for another reason.
        """
        logger.info(f"Starting XE training ({self.spec.architecture.value}) on {data}")
        try:
            vocab = Vocab.load(data / Settings.VOCAB_FILE)
            train = load_split(data, "train", vocab)
            val = load_split(data, "val", vocab)
            model = build_model(self.spec, len(vocab), train, self.cfg.seed)
            try:
                self._train(model, train, val)
            finally:
                # completed epochs are kept even when a later one diverges
                if self.log:
                    write_csv(self.run_dir / Settings.XE_LOG_FILE, self.log)
            return self.checkpoint_path
        except LabError:
            raise
        except Exception as e:
            logger.error(f"XE training failed: {e!s}")
            raise TrainingError(f"XE training failed: {e!s}") from e

    def _train(self, model: Captioner, train: SplitData, val: SplitData) -> None:
        cfg = self.cfg
        adam = xe_adam(cfg)
        rng = np.random.default_rng(cfg.seed + 1)
        val_stats = split_stats(val, model.cfg.eos_id)
        n_batches = -(-len(train) // cfg.batch_size)
        best = -np.inf

        for epoch in range(cfg.xe_epochs):
            p = feedback_prob(cfg, epoch)
            lr = xe_lr(cfg, epoch)
            mode = RolloutMode.SCHEDULED if p > 0 else RolloutMode.TEACHER
            order = rng.permutation(len(train))
            total_loss = total_words = 0.0

            self.init_progress(n_batches, f"XE epoch {epoch}")
            try:
                for start in range(0, len(train), cfg.batch_size):
                    rows = order[start : start + cfg.batch_size]
                    try:
                        loss, words = self._step(model, train, rows, rng, mode, p, adam, lr)
                    except NonFiniteError as e:
                        raise DivergenceError(
                            f"XE training diverged at epoch {epoch}: {e!s}"
                        ) from e
                    total_loss += loss
                    total_words += words
                    self.update_progress(loss=loss / max(words, 1.0))
            finally:
                self.close_progress()

            scores = evaluate_greedy(model, val, val_stats)
            row = XELogRow(
                epoch=epoch,
                feedback_prob=p,
                lr=lr,
                train_loss=total_loss / max(total_words, 1.0),
                val_cider=scores[MetricKind.CIDER].corpus_score,
                val_bleu4=scores[MetricKind.BLEU].corpus_score,
                val_rouge_l=scores[MetricKind.ROUGE].corpus_score,
            )
            self.log.append(row)
            logger.info(
                f"XE epoch {epoch}: loss {row.train_loss:.4f}, p={p:.2f}, lr={lr:.2e}, "
                f"val CIDEr-D {row.val_cider:.4f}"
            )
            if row.val_cider > best:
                best = row.val_cider
                save_model(model, self.checkpoint_path)
                logger.info(f"Saved best XE checkpoint (epoch {epoch}) to {self.checkpoint_path}")

    def _step(
        self,
        model: Captioner,
        train: SplitData,
        rows: np.ndarray,
        rng: np.random.Generator,
        mode: RolloutMode,
        p: float,
        adam: AdamConfig,
        lr: float,
    ) -> tuple[float, float]:
        """One minibatch update; returns the summed loss and the word count."""
        T, eos = model.cfg.max_length, model.cfg.eos_id
        targets = batch_targets(train, rows, rng, T, eos)
        record = rollout(
            model,
            train.features_for(model, rows),
            mode,
            refs=targets,
            feedback_prob=p,
            rng=rng,
            feedback=self.cfg.feedback,
        )
        loss, dlogits = xe_loss_and_grad(record)
        if not np.isfinite(loss):
            raise NonFiniteError(f"XE loss is {loss}")
        backprop_through_time(model, record, dlogits)
        model.store.scale_grad(1.0 / len(rows))
        adam_step(model.store, adam, lr)
        return loss, float(record.mask.sum())
