"""Multi-seed experiment checks; all but the validation-selection ones are slow."""

import hashlib
import math
from pathlib import Path

import numpy as np
import pytest

from scst_lab.config.settings import Settings
from scst_lab.diffcore.adam import AdamConfig
from scst_lab.harness.dataset import gen_dataset, load_split
from scst_lab.harness.evaluate import evaluate_greedy, split_stats
from scst_lab.harness.reporting import read_csv, write_csv
from scst_lab.harness.train_rl import TrainRL, reward_scorer
from scst_lab.harness.train_xe import TrainXE
from scst_lab.harness.types import ModelSpec, RLConfig, TrainConfig
from scst_lab.main import main
from scst_lab.metrics.types import MetricKind
from scst_lab.models.captioner import load_model
from scst_lab.rl import (
    LearnedBaseline,
    collect_episode,
    estimator_diagnostics,
    learned_baseline_grad,
    learned_baseline_update,
    reinforce_grad,
    scst_grad,
)
from scst_lab.rl.types import EstimatorKind

SEEDS = range(8)
SPEC = ModelSpec(hidden=16, max_length=10)
RL_EPOCHS = 3


def warm_config(seed: int) -> TrainConfig:
    return TrainConfig(seed=seed, xe_epochs=4, batch_size=25, xe_lr=5e-3)


def val_cider(model_path: Path, data_dir: Path) -> float:
    model = load_model(model_path)
    val = load_split(data_dir, "val")
    scores = evaluate_greedy(model, val, split_stats(val, model.cfg.eos_id))
    return scores[MetricKind.CIDER].corpus_score


def sign_test_p(wins: int, n: int) -> float:
    """One-sided P(at least ``wins`` of ``n`` fair coin flips)."""
    return sum(math.comb(n, k) for k in range(wins, n + 1)) / 2**n


def file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class TestValidationSelection:
    """The saved checkpoint is the epoch with the best greedy validation CIDEr-D."""

    def test_xe_checkpoint(self, tiny_dataset, xe_run, xe_checkpoint):
        logged = [float(r["val_cider"]) for r in read_csv(xe_run.run_dir / Settings.XE_LOG_FILE)]
        assert val_cider(xe_checkpoint, tiny_dataset) == pytest.approx(max(logged), abs=1e-12)

    def test_rl_checkpoint(self, tiny_dataset, xe_checkpoint, tmp_path):
        stage = TrainRL(
            tiny_dataset,
            tmp_path,
            TrainConfig(batch_size=10),
            RLConfig(rl_epochs=3, rl_lr=1e-2),
            progress_enabled=False,
        )
        stage.process(xe_checkpoint)
        logged = [float(r["greedy_cider"]) for r in read_csv(tmp_path / Settings.RL_LOG_FILE)]
        assert len(logged) == 3
        assert val_cider(stage.checkpoint_path, tiny_dataset) == pytest.approx(
            max(logged), abs=1e-12
        )

    def test_sign_test_p(self):
        assert sign_test_p(7, 8) == pytest.approx(9 / 256)
        assert sign_test_p(0, 8) == 1.0


@pytest.fixture(scope="module")
def experiment_data(tmp_path_factory: pytest.TempPathFactory) -> Path:
    return gen_dataset(
        tmp_path_factory.mktemp("experiment"), seed=11, n_train=400, n_val=80, n_test=80
    )


@pytest.fixture(scope="module")
def warm_checkpoints(
    experiment_data: Path, tmp_path_factory: pytest.TempPathFactory
) -> dict[int, Path]:
    """An XE-trained checkpoint per seed."""
    out = {}
    for seed in SEEDS:
        stage = TrainXE(
            tmp_path_factory.mktemp(f"xe{seed}"), SPEC, warm_config(seed), progress_enabled=False
        )
        out[seed] = stage.process(experiment_data)
    return out


def fine_tune(
    data_dir: Path,
    checkpoint: Path,
    run_dir: Path,
    seed: int,
    reward: MetricKind = MetricKind.CIDER,
) -> TrainRL:
    stage = TrainRL(
        data_dir,
        run_dir,
        TrainConfig(seed=seed, batch_size=25),
        RLConfig(rl_epochs=RL_EPOCHS, rl_lr=5e-4, reward=reward),
        progress_enabled=False,
    )
    stage.process(checkpoint)
    return stage


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(4))
def test_scst_improves_validation_cider(experiment_data, warm_checkpoints, tmp_path, seed):
    before = val_cider(warm_checkpoints[seed], experiment_data)
    stage = fine_tune(experiment_data, warm_checkpoints[seed], tmp_path, seed)
    after = max(row.greedy_cider for row in stage.log)
    assert after > before
    assert val_cider(stage.checkpoint_path, experiment_data) == pytest.approx(after, abs=1e-12)


@pytest.mark.slow
def test_reward_metric_diagonal(experiment_data, warm_checkpoints, tmp_path):
    """Fine-tuning on a metric gives the best test score in that metric for most metrics."""
    metrics = [MetricKind.CIDER, MetricKind.BLEU, MetricKind.ROUGE]
    test = load_split(experiment_data, "test")
    table: dict[MetricKind, dict[MetricKind, float]] = {}
    for reward in metrics:
        stage = fine_tune(
            experiment_data, warm_checkpoints[0], tmp_path / reward.value, 0, reward
        )
        model = load_model(stage.checkpoint_path)
        scores = evaluate_greedy(model, test, split_stats(test, model.cfg.eos_id))
        table[reward] = {m: scores[m].corpus_score for m in metrics}

    diagonal = sum(max(metrics, key=lambda r: table[r][m]) is m for m in metrics)
    assert diagonal >= 2, table


@pytest.mark.slow
def test_self_critical_baseline_reduces_variance(experiment_data, warm_checkpoints, tmp_path):
    """Across XE-trained seeds SCST's gradient variance beats REINFORCE's (one-sided sign test)."""
    train = load_split(experiment_data, "train")
    rows = np.arange(200)
    table = []
    wins = 0
    for seed in SEEDS:
        model = load_model(warm_checkpoints[seed])
        scorer = reward_scorer(train, RLConfig(), model.cfg.eos_id)
        reward = scorer.bind(rows.tolist())
        feats = train.features_for(model, rows)
        rng = np.random.default_rng(seed)

        baseline = LearnedBaseline(model.cfg.hidden, AdamConfig(lr=1e-2))
        for _ in range(30):
            learned_baseline_update(collect_episode(model, feats, reward, rng), baseline)

        batch = collect_episode(model, feats, reward, rng, with_greedy=True)
        grads = {
            EstimatorKind.REINFORCE: reinforce_grad(batch).copy(),
            EstimatorKind.SCST: scst_grad(batch).copy(),
            EstimatorKind.BASELINE: learned_baseline_grad(batch, baseline).copy(),
        }
        by_kind = {
            kind: estimator_diagnostics(
                [(dlogits, batch.sampled, batch.rewards)], seed, kind.value, 0.0
            )
            for kind, dlogits in grads.items()
        }
        table.extend(by_kind.values())
        wins += (
            by_kind[EstimatorKind.SCST].grad_variance_mean
            < by_kind[EstimatorKind.REINFORCE].grad_variance_mean
        )

    written = read_csv(write_csv(tmp_path / "variance.csv", table))
    assert len(written) == 3 * len(SEEDS)
    assert {r["estimator"] for r in written} == {"reinforce", "scst", "baseline"}
    assert all(np.isfinite(float(r["grad_variance_mean"])) for r in written)
    assert sign_test_p(wins, len(SEEDS)) < 0.05, f"SCST won {wins}/{len(SEEDS)}"


@pytest.mark.slow
def test_pipeline_is_reproducible(tmp_path):
    """Two runs with the same seed write byte-identical data, checkpoints and CSVs."""
    config = tmp_path / "run.toml"
    config.write_text(
        "[model]\nhidden = 8\nmax_length = 8\n\n"
        "[train]\nseed = 4\nxe_epochs = 2\nbatch_size = 100\n\n"
        "[rl]\nrl_epochs = 2\n"
    )
    for name in ("a", "b"):
        with pytest.raises(SystemExit) as exc:
            main(
                [
                    "pipeline",
                    "--config",
                    str(config),
                    "--data-dir",
                    str(tmp_path / name / "data"),
                    "--run-dir",
                    str(tmp_path / name / "run"),
                    "--no-progress",
                ]
            )
        assert exc.value.code == 0

    outputs = [
        Path("data") / Settings.TRAIN_FILE,
        Path("data") / Settings.VOCAB_FILE,
        Path("run") / Settings.XE_CHECKPOINT,
        Path("run") / Settings.RL_CHECKPOINT,
        Path("run") / Settings.XE_LOG_FILE,
        Path("run") / Settings.RL_LOG_FILE,
        Path("run") / "eval.csv",
    ]
    for rel in outputs:
        assert file_digest(tmp_path / "a" / rel) == file_digest(tmp_path / "b" / rel), rel
