"""SCST Lab command line

Generates the toy dataset, runs the XE and policy-gradient recipes, decodes
and scores captions. Every subcommand logs its progress, exits 0 on success
and 1 after logging the failure.
"""

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any, NoReturn

from .config.settings import Settings
from .core import ExperimentPipeline
from .exceptions import LabError, UsageError
from .harness.dataset import GenerateDataset, load_split
from .harness.evaluate import (
    Evaluate,
    decode_rows,
    decode_split,
    eval_files,
    eval_run,
    load_models,
    sweep_beam,
)
from .harness.reporting import write_jsonl
from .harness.train_rl import TrainRL
from .harness.train_xe import TrainXE
from .harness.types import RunConfig
from .harness.vocab import Vocab
from .metrics.types import MetricKind
from .models.types import Architecture
from .rl.types import EstimatorKind

logger = logging.getLogger(__name__)


def _paths(value: str) -> list[Path]:
    return [Path(p) for p in value.split(",") if p]


def _ints(value: str) -> list[int]:
    try:
        return [int(v) for v in value.split(",") if v]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"Expected comma-separated integers: {value}") from e


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML run configuration")
    common.add_argument(
        "--data-dir", type=Path, default=Settings.DATA_DIR, help="Dataset directory"
    )
    common.add_argument(
        "--run-dir", type=Path, default=Settings.RUNS_DIR, help="Checkpoint and log directory"
    )
    common.add_argument("--seed", type=int, help="Random seed")
    common.add_argument("--no-progress", action="store_true", help="Disable progress bars")
    common.add_argument("--debug", action="store_true", help="Enable debug logging")
    return common


def _add_model_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--architecture", choices=[a.value for a in Architecture], help="Captioner variant"
    )
    parser.add_argument("--hidden", type=int, help="LSTM hidden size")
    parser.add_argument("--xe-epochs", type=int, help="Cross-entropy epochs")
    parser.add_argument("--batch-size", type=int, help="Minibatch size")


def _add_rl_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--estimator", choices=[k.value for k in EstimatorKind], help="Gradient estimator"
    )
    parser.add_argument("--reward", choices=[k.value for k in MetricKind], help="Reward metric")
    parser.add_argument("--n-future", type=int, help="Future words seen by true-scst baselines")
    parser.add_argument("--rl-epochs", type=int, help="Policy-gradient epochs")


def _add_beam_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--beam", type=int, help="Beam width (1 decodes greedily)")
    parser.add_argument("--prune-margin", type=float, help="Log-probability pruning margin")


def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    """Parse command line arguments.

    Args:
        argv: Arguments without the program name; ``sys.argv`` when None.

    Returns:
        argparse.Namespace: Parsed command line arguments.
    """
    common = _common_parser()
    parser = argparse.ArgumentParser(
        description="Self-critical sequence training laboratory",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-data", parents=[common], help="Generate the toy dataset")
    gen.add_argument("--n-train", type=int, default=Settings.N_TRAIN)
    gen.add_argument("--n-val", type=int, default=Settings.N_VAL)
    gen.add_argument("--n-test", type=int, default=Settings.N_TEST)
    gen.add_argument("--min-count", type=int, default=Settings.MIN_WORD_COUNT)

    xe = sub.add_parser("train-xe", parents=[common], help="Cross-entropy pretraining")
    _add_model_args(xe)

    rl = sub.add_parser("train-rl", parents=[common], help="Policy-gradient fine-tuning")
    rl.add_argument("--checkpoint", type=Path, help="XE checkpoint (default: run dir)")
    _add_rl_args(rl)

    dec = sub.add_parser("decode", parents=[common], help="Decode a split to JSON lines")
    dec.add_argument("--checkpoint", type=Path, help="Model checkpoint")
    dec.add_argument("--ensemble", type=_paths, help="Comma-separated member checkpoints")
    dec.add_argument("--split", choices=["train", "val", "test"], default="test")
    dec.add_argument("--out", type=Path, required=True, help="Output JSON-lines file")
    _add_beam_args(dec)

    ev = sub.add_parser("eval", parents=[common], help="Score captions or checkpoints")
    ev.add_argument("--candidates", type=Path, help="Decoded JSON lines")
    ev.add_argument("--references", type=Path, help="Split JSON lines with references")
    ev.add_argument("--vocab", type=Path, help="Vocabulary JSON (default: data dir)")
    ev.add_argument("--checkpoints", type=_paths, help="Comma-separated checkpoints")
    ev.add_argument("--split", choices=["train", "val", "test"], default="test")
    ev.add_argument("--no-eos", action="store_true", help="Do not score EOS as a word")
    ev.add_argument("--out", type=Path, required=True, help="Output CSV")
    _add_beam_args(ev)

    sweep = sub.add_parser("sweep-beam", parents=[common], help="Tune beam width on val")
    sweep.add_argument("--checkpoints", type=_paths, required=True)
    sweep.add_argument("--widths", type=_ints, default=[1, 2, 3, 5])
    sweep.add_argument("--prune-margin", type=float)
    sweep.add_argument("--out", type=Path, required=True, help="Output CSV")

    pipe = sub.add_parser("pipeline", parents=[common], help="gen-data, train-xe, train-rl, eval")
    _add_model_args(pipe)
    _add_rl_args(pipe)
    _add_beam_args(pipe)

    return parser.parse_args(argv)


def setup_logging(debug: bool = False) -> None:
    """Configure logging with appropriate level and format.

    Args:
        debug: Whether to enable debug logging.
    """
    logging.basicConfig(
        level=logging.DEBUG if debug else getattr(logging, Settings.LOG_LEVEL),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[logging.StreamHandler()],
    )


def load_run_config(args: argparse.Namespace) -> RunConfig:
    """Merge the config file with the flags given on the command line."""

    def pick(**names: str) -> dict[str, Any]:
        return {field: getattr(args, flag, None) for field, flag in names.items()}

    return RunConfig.load(
        args.config,
        model=pick(architecture="architecture", hidden="hidden"),
        train=pick(seed="seed", xe_epochs="xe_epochs", batch_size="batch_size"),
        rl=pick(
            estimator="estimator",
            reward="reward",
            n_future="n_future",
            rl_epochs="rl_epochs",
        ),
        decode=pick(width="beam", prune_margin="prune_margin"),
    )


def run_gen_data(args: argparse.Namespace, cfg: RunConfig) -> Path:
    stage = GenerateDataset(
        out_dir=args.data_dir,
        seed=cfg.train.seed,
        n_train=args.n_train,
        n_val=args.n_val,
        n_test=args.n_test,
        min_count=args.min_count,
        progress_enabled=not args.no_progress,
    )
    return stage.process(None)


def run_train_xe(args: argparse.Namespace, cfg: RunConfig) -> Path:
    stage = TrainXE(args.run_dir, cfg.model, cfg.train, progress_enabled=not args.no_progress)
    return stage.process(args.data_dir)


def run_train_rl(args: argparse.Namespace, cfg: RunConfig) -> Path:
    checkpoint = args.checkpoint or args.run_dir / Settings.XE_CHECKPOINT
    stage = TrainRL(
        args.data_dir, args.run_dir, cfg.train, cfg.rl, progress_enabled=not args.no_progress
    )
    return stage.process(checkpoint)


def run_decode(args: argparse.Namespace, cfg: RunConfig) -> Path:
    checkpoints = args.ensemble or ([args.checkpoint] if args.checkpoint else [])
    if not checkpoints:
        raise UsageError("decode needs --checkpoint or --ensemble")
    models = load_models(checkpoints)
    vocab = Vocab.load(args.data_dir / Settings.VOCAB_FILE)
    split = load_split(args.data_dir, args.split, vocab)
    beam = cfg.decode if cfg.decode.width > 1 else None
    hyps = decode_split(models[0] if len(models) == 1 else models, split, beam)
    write_jsonl(args.out, decode_rows(hyps, split, vocab))
    logger.info(f"Decoded {len(hyps)} {args.split} examples to {args.out}")
    return args.out


def run_eval(args: argparse.Namespace, cfg: RunConfig) -> Path:
    if args.checkpoints:
        eval_run(args.checkpoints, args.data_dir, cfg.decode, args.out, args.split)
        return args.out
    if args.candidates is None or args.references is None:
        raise UsageError("eval needs --checkpoints or both --candidates and --references")
    vocab = args.vocab or args.data_dir / Settings.VOCAB_FILE
    rows = eval_files(args.candidates, args.references, vocab, args.out, not args.no_eos)
    corpus = rows[-1]
    logger.info(
        f"Corpus CIDEr-D {corpus.cider_d:.4f}, BLEU-4 {corpus.bleu4:.4f}, "
        f"ROUGE-L {corpus.rouge_l:.4f}"
    )
    return args.out


def run_sweep_beam(args: argparse.Namespace, cfg: RunConfig) -> Path:
    sweep_beam(args.checkpoints, args.data_dir, args.widths, cfg.decode.prune_margin, args.out)
    return args.out


def run_pipeline(args: argparse.Namespace, cfg: RunConfig) -> Path:
    progress = not args.no_progress
    pipeline = ExperimentPipeline(
        [
            GenerateDataset(out_dir=args.data_dir, seed=cfg.train.seed, progress_enabled=progress),
            TrainXE(args.run_dir, cfg.model, cfg.train, progress_enabled=progress),
            TrainRL(args.data_dir, args.run_dir, cfg.train, cfg.rl, progress_enabled=progress),
            Evaluate(
                args.data_dir,
                args.run_dir / "eval.csv",
                beam=cfg.decode,
                progress_enabled=progress,
            ),
        ]
    )
    result: Path = pipeline.run(None)
    return result


COMMANDS = {
    "gen-data": run_gen_data,
    "train-xe": run_train_xe,
    "train-rl": run_train_rl,
    "decode": run_decode,
    "eval": run_eval,
    "sweep-beam": run_sweep_beam,
    "pipeline": run_pipeline,
}


def run_command(args: argparse.Namespace) -> Path:
    """Execute one subcommand.

    Raises:
        LabError: If the command fails.
    """
    logger.info(f"Running {args.command}")
    try:
        result = COMMANDS[args.command](args, load_run_config(args))
        logger.info(f"{args.command} completed: {result}")
        return result
    except LabError as e:
        logger.error(f"{args.command} failed: {e!s}")
        raise
    except Exception as e:
        logger.error(f"Unexpected error: {e!s}")
        raise LabError(f"{args.command} failed with unexpected error: {e!s}") from e


def main(argv: Sequence[str] | None = None) -> NoReturn:
    """Main entry point: parse, set up logging, run, set the exit code."""
    try:
        args = parse_args(argv)
        setup_logging(args.debug)
        run_command(args)
        sys.exit(0)
    except Exception as e:
        logger.error(f"Command failed: {e!s}")
        sys.exit(1)


if __name__ == "__main__":
    main()
