"""Toy captioning data, training recipes and evaluation runs."""

from .dataset import GenerateDataset, SplitData, load_split, read_split, write_split
from .evaluate import (
    Evaluate,
    decode_rows,
    decode_split,
    eval_files,
    eval_run,
    evaluate_greedy,
    split_stats,
    sweep_beam,
)
from .grammar import CaptionGrammar, encode_scene, feature_dim, random_scene
from .reporting import read_csv, read_jsonl, write_csv, write_jsonl
from .schedules import feedback_prob, rl_lr, xe_lr
from .train_rl import TrainRL, reward_scorer
from .train_xe import TrainXE, build_model, dataset_xe_loss
from .types import (
    CaptionExample,
    DecodeRow,
    EvalRow,
    ExampleScoreRow,
    ModelSpec,
    RLConfig,
    RunConfig,
    ToyScene,
    TrainConfig,
    XELogRow,
)
from .vocab import Vocab

__all__ = [
    "CaptionExample",
    "CaptionGrammar",
    "DecodeRow",
    "EvalRow",
    "Evaluate",
    "ExampleScoreRow",
    "GenerateDataset",
    "ModelSpec",
    "RLConfig",
    "RunConfig",
    "SplitData",
    "ToyScene",
    "TrainConfig",
    "TrainRL",
    "TrainXE",
    "Vocab",
    "XELogRow",
    "build_model",
    "dataset_xe_loss",
    "decode_rows",
    "decode_split",
    "encode_scene",
    "eval_files",
    "eval_run",
    "evaluate_greedy",
    "feature_dim",
    "feedback_prob",
    "load_split",
    "random_scene",
    "read_csv",
    "read_jsonl",
    "read_split",
    "reward_scorer",
    "rl_lr",
    "split_stats",
    "sweep_beam",
    "write_csv",
    "write_jsonl",
    "write_split",
    "xe_lr",
]
