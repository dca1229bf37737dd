"""Tests for run configuration, schedules and report files."""

from pathlib import Path

import pytest

from scst_lab.config.settings import Settings, load_config_file, thread_count
from scst_lab.exceptions import ConfigError, EvaluationError
from scst_lab.harness.reporting import read_csv, read_jsonl, write_csv, write_jsonl
from scst_lab.harness.schedules import feedback_prob, rl_lr, xe_lr
from scst_lab.harness.types import EvalRow, RLConfig, RunConfig, TrainConfig
from scst_lab.models.types import Architecture
from scst_lab.rl.types import EstimatorKind

EXAMPLE_CONFIG = Path(__file__).parent.parent.parent / "configs" / "example.toml"


@pytest.fixture
def config_file(tmp_path: Path) -> Path:
    path = tmp_path / "run.toml"
    path.write_text(
        "[model]\n"
        'architecture = "att2in"\n'
        "hidden = 32\n"
        "\n"
        "[rl]\n"
        'estimator = "td-scst"\n'
        "rl_epochs = 3\n"
    )
    return path


class TestRunConfig:
    def test_defaults(self):
        cfg = RunConfig.load(None)
        assert cfg.model.architecture is Architecture.FC
        assert cfg.train.batch_size == Settings.BATCH_SIZE
        assert cfg.rl.estimator is EstimatorKind.SCST
        assert cfg.decode.width == Settings.BEAM_WIDTH

    def test_file_values(self, config_file):
        cfg = RunConfig.load(config_file)
        assert cfg.model.architecture is Architecture.ATT2IN
        assert cfg.model.hidden == 32
        assert cfg.rl.estimator is EstimatorKind.TD_SCST
        assert cfg.rl.rl_epochs == 3

    def test_overrides_win_and_none_is_ignored(self, config_file):
        cfg = RunConfig.load(config_file, model={"hidden": 16, "architecture": None})
        assert cfg.model.hidden == 16
        assert cfg.model.architecture is Architecture.ATT2IN

    def test_invalid_value(self, config_file):
        with pytest.raises(ConfigError, match="Invalid run configuration"):
            RunConfig.load(config_file, train={"batch_size": 0})

    def test_unknown_estimator(self):
        with pytest.raises(ConfigError):
            RunConfig.load(None, rl={"estimator": "actor-critic"})

    def test_unknown_section(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text("[optimizer]\nlr = 1.0\n")
        with pytest.raises(ConfigError, match="Unknown config sections"):
            load_config_file(path)

    def test_missing_and_malformed(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config_file(tmp_path / "missing.toml")
        path = tmp_path / "broken.toml"
        path.write_text("[model\n")
        with pytest.raises(ConfigError, match="Malformed"):
            load_config_file(path)

    def test_example_config_loads(self):
        cfg = RunConfig.load(EXAMPLE_CONFIG)
        assert cfg.rl.reward.value == "cider"


def test_thread_count(monkeypatch):
    monkeypatch.delenv(Settings.THREADS_ENV_VAR, raising=False)
    assert thread_count() == 1
    monkeypatch.setenv(Settings.THREADS_ENV_VAR, "3")
    assert thread_count() == 3
    for bad in ("zero", "0"):
        monkeypatch.setenv(Settings.THREADS_ENV_VAR, bad)
        with pytest.raises(ConfigError):
            thread_count()


class TestSchedules:
    @pytest.mark.parametrize(
        ("epoch", "expected"), [(0, 0.0), (4, 0.0), (5, 0.05), (12, 0.10), (100, 0.25)]
    )
    def test_feedback_probability(self, epoch, expected):
        assert feedback_prob(TrainConfig(), epoch) == pytest.approx(expected)

    def test_xe_annealing(self):
        cfg = TrainConfig(xe_lr=1e-3)
        assert xe_lr(cfg, 2) == pytest.approx(1e-3)
        assert xe_lr(cfg, 6) == pytest.approx(1e-3 * 0.64)

    def test_rl_rate_fixed_unless_annealed(self):
        train = TrainConfig()
        assert rl_lr(train, RLConfig(rl_lr=1e-4), 9) == 1e-4
        assert rl_lr(train, RLConfig(rl_lr=1e-4, anneal=True), 3) == pytest.approx(0.8e-4)


class TestReporting:
    def test_csv_columns_follow_fields(self, tmp_path):
        rows = [EvalRow(model="m", search="beam", beam=2, cider=1.5, bleu4=0.2, rouge_l=0.3)]
        path = write_csv(tmp_path / "sub" / "eval.csv", rows)
        assert path.read_text().splitlines()[0] == "model,search,beam,cider,bleu4,rouge_l"
        assert read_csv(path) == [
            {
                "model": "m",
                "search": "beam",
                "beam": "2",
                "cider": "1.5",
                "bleu4": "0.2",
                "rouge_l": "0.3",
            }
        ]

    def test_csv_needs_rows_or_header(self, tmp_path):
        with pytest.raises(EvaluationError):
            write_csv(tmp_path / "x.csv", [])
        path = write_csv(tmp_path / "y.csv", [], fieldnames=["a", "b"])
        assert path.read_text() == "a,b\n"

    def test_jsonl(self, tmp_path):
        rows = [EvalRow(model="m", search="greedy", beam=1, cider=0.0, bleu4=0.0, rouge_l=0.0)]
        path = write_jsonl(tmp_path / "rows.jsonl", rows)
        assert read_jsonl(path) == [rows[0].model_dump(mode="json")]

    def test_jsonl_errors(self, tmp_path):
        with pytest.raises(EvaluationError, match="not found"):
            read_jsonl(tmp_path / "missing.jsonl")
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": 1}\n{oops\n')
        with pytest.raises(EvaluationError, match=":2"):
            read_jsonl(path)
