"""Decoding whole splits and scoring them: eval runs, beam sweeps, file scoring."""

import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from ..config.settings import Settings, thread_count
from ..core import ExperimentStage
from ..decode.decoders import member_features
from ..decode.search import Features, beam_search, greedy_decode
from ..decode.types import BeamConfig, Hypothesis
from ..exceptions import EvaluationError, LabError
from ..metrics.ngrams import NGramStats, tokenize_for_reward
from ..metrics.reward import evaluate_corpus
from ..metrics.types import MetricKind, MetricScore
from ..models.captioner import Captioner, load_model
from .dataset import SplitData, load_split, read_split
from .reporting import read_jsonl, write_csv
from .types import DecodeRow, EvalRow, ExampleScoreRow
from .vocab import Vocab

logger = logging.getLogger(__name__)

Decodable = Captioner | Sequence[Captioner]


def split_features(model: Decodable, split: SplitData) -> Features:
    """The feature view of a model, or one view per ensemble member."""
    if isinstance(model, Captioner):
        return split.features_for(model)
    return member_features(model, split.global_feats, split.spatial_feats)


def _rows(features: Features, rows: np.ndarray) -> Features:
    if isinstance(features, np.ndarray):
        return features[rows]
    return [f[rows] for f in features]


def _decode_chunk(
    model: Decodable, features: Features, beam: BeamConfig | None
) -> list[Hypothesis]:
    if beam is None:
        return greedy_decode(model, features)
    return [hyps[0] for hyps in beam_search(model, features, beam)]


def decode_split(
    model: Decodable,
    split: SplitData,
    beam: BeamConfig | None = None,
    threads: int | None = None,
) -> list[Hypothesis]:
    """Best hypothesis per example, greedy when ``beam`` is None.

    Examples are decoded in contiguous chunks on a thread pool sized by
    ``SCST_LAB_THREADS``; results come back in example order.
    """
    workers = threads or thread_count()
    features = split_features(model, split)
    chunks = [c for c in np.array_split(np.arange(len(split)), workers) if c.size]
    if len(chunks) == 1:
        return _decode_chunk(model, features, beam)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(lambda rows: _decode_chunk(model, _rows(features, rows), beam), chunks)
        return [h for part in parts for h in part]


def split_stats(split: SplitData, eos_id: int, include_eos: bool = True) -> NGramStats:
    """Document frequencies over one split's references."""
    return NGramStats.from_references(
        [[tokenize_for_reward(r, eos_id, include_eos) for r in refs] for refs in split.references]
    )


def score_hypotheses(
    hyps: Sequence[Hypothesis],
    split: SplitData,
    stats: NGramStats,
    eos_id: int,
    include_eos: bool = True,
) -> dict[MetricKind, MetricScore]:
    if len(hyps) != len(split):
        raise EvaluationError(f"{len(hyps)} hypotheses for {len(split)} examples")
    cands = [tokenize_for_reward(h.tokens, eos_id, include_eos) for h in hyps]
    refs = [[tokenize_for_reward(r, eos_id, include_eos) for r in rs] for rs in split.references]
    return evaluate_corpus(cands, refs, stats)


def evaluate_greedy(
    model: Captioner, split: SplitData, stats: NGramStats, threads: int | None = None
) -> dict[MetricKind, MetricScore]:
    """Greedy-decode a split and score it with all three metrics."""
    hyps = decode_split(model, split, threads=threads)
    return score_hypotheses(hyps, split, stats, model.cfg.eos_id)


def _eval_row(
    name: str, search: str, width: int, scores: dict[MetricKind, MetricScore]
) -> EvalRow:
    return EvalRow(
        model=name,
        search=search,
        beam=width,
        cider=scores[MetricKind.CIDER].corpus_score,
        bleu4=scores[MetricKind.BLEU].corpus_score,
        rouge_l=scores[MetricKind.ROUGE].corpus_score,
    )


def model_name(path: Path) -> str:
    return f"{path.parent.name}/{path.stem}"


def load_models(checkpoints: Sequence[Path]) -> list[Captioner]:
    if not checkpoints:
        raise EvaluationError("No checkpoints given")
    return [load_model(p) for p in checkpoints]


def eval_run(
    checkpoints: Sequence[Path],
    data_dir: Path,
    beam: BeamConfig,
    out_path: Path | None = None,
    split_name: str = "test",
    threads: int | None = None,
) -> list[EvalRow]:
    """Greedy and beam scores for every model, plus the ensemble when there are several.

    CIDEr-D document frequencies come from the evaluated split's references.
    """
    models = load_models(checkpoints)
    split = load_split(data_dir, split_name)
    eos = models[0].cfg.eos_id
    stats = split_stats(split, eos)

    entries: list[tuple[str, Decodable]] = [
        (model_name(p), m) for p, m in zip(checkpoints, models, strict=True)
    ]
    if len(models) > 1:
        entries.append(("ensemble", models))

    rows = []
    for name, model in entries:
        greedy = decode_split(model, split, threads=threads)
        rows.append(_eval_row(name, "greedy", 1, score_hypotheses(greedy, split, stats, eos)))
        beamed = decode_split(model, split, beam, threads)
        beam_scores = score_hypotheses(beamed, split, stats, eos)
        rows.append(_eval_row(name, "beam", beam.width, beam_scores))
        logger.info(f"{name}: greedy CIDEr-D {rows[-2].cider:.4f}, beam {rows[-1].cider:.4f}")
    if out_path is not None:
        write_csv(out_path, rows)
    return rows


def sweep_beam(
    checkpoints: Sequence[Path],
    data_dir: Path,
    widths: Sequence[int],
    prune_margin: float = Settings.PRUNE_MARGIN,
    out_path: Path | None = None,
    threads: int | None = None,
) -> list[EvalRow]:
    """Validation scores of each model over a range of beam widths."""
    models = load_models(checkpoints)
    split = load_split(data_dir, "val")
    eos = models[0].cfg.eos_id
    stats = split_stats(split, eos)
    rows = []
    for path, model in zip(checkpoints, models, strict=True):
        for width in widths:
            cfg = BeamConfig(width=width, prune_margin=prune_margin)
            hyps = decode_split(model, split, cfg, threads)
            scores = score_hypotheses(hyps, split, stats, eos)
            rows.append(_eval_row(model_name(path), "beam", width, scores))
        best = max((r for r in rows if r.model == model_name(path)), key=lambda r: r.cider)
        logger.info(f"{model_name(path)}: best beam width {best.beam} (CIDEr-D {best.cider:.4f})")
    if out_path is not None:
        write_csv(out_path, rows)
    return rows


def decode_rows(hyps: Sequence[Hypothesis], split: SplitData, vocab: Vocab) -> list[DecodeRow]:
    return [
        DecodeRow(
            id=example_id,
            tokens=list(h.tokens),
            text=" ".join(vocab.decode(h.tokens)),
            logprob=h.logprob,
            mean_token_logprob=h.mean_token_logprob,
        )
        for example_id, h in zip(split.ids, hyps, strict=True)
    ]


def eval_files(
    candidates_path: Path,
    references_path: Path,
    vocab_path: Path,
    out_path: Path | None = None,
    include_eos: bool = True,
) -> list[ExampleScoreRow]:
    """Score decoded JSON lines against a split file; last row is the corpus score.

    Candidate rows need ``id`` and ``tokens``; every candidate id must exist
    in the reference file.

    Raises:
        EvaluationError: On missing or unmatched examples.
    """
    vocab = Vocab.load(vocab_path)
    eos = vocab.eos_id
    examples = {ex.id: ex for ex in read_split(references_path)}
    candidates = read_jsonl(candidates_path)
    if not candidates:
        raise EvaluationError(f"No candidates in {candidates_path}")

    ids, cands, refs = [], [], []
    try:
        for row in candidates:
            ex = examples[int(row["id"])]
            ids.append(str(ex.id))
            cands.append(tokenize_for_reward([int(t) for t in row["tokens"]], eos, include_eos))
            refs.append(
                [tokenize_for_reward(vocab.encode(r), eos, include_eos) for r in ex.references]
            )
    except KeyError as e:
        raise EvaluationError(f"Candidate row lacks a match or field: {e!s}") from e

    all_refs = [
        [tokenize_for_reward(vocab.encode(r), eos, include_eos) for r in ex.references]
        for ex in examples.values()
    ]
    scores = evaluate_corpus(cands, refs, NGramStats.from_references(all_refs))
    cider, bleu, rouge = (scores[k] for k in (MetricKind.CIDER, MetricKind.BLEU, MetricKind.ROUGE))
    rows = [
        ExampleScoreRow(id=i, cider_d=c, bleu4=b, rouge_l=r)
        for i, c, b, r in zip(
            ids, cider.sentence_scores, bleu.sentence_scores, rouge.sentence_scores, strict=True
        )
    ]
    rows.append(
        ExampleScoreRow(
            id="corpus",
            cider_d=cider.corpus_score,
            bleu4=bleu.corpus_score,
            rouge_l=rouge.corpus_score,
        )
    )
    if out_path is not None:
        write_csv(out_path, rows)
    return rows


class Evaluate(ExperimentStage[Path, Path]):
    """Pipeline stage scoring a checkpoint on the test split.

    Args:
        data_dir: Dataset directory.
        out_path: Metrics CSV to write.
        beam: Beam settings for the beam rows.
        extra_checkpoints: Further models to evaluate (and ensemble) alongside.
        progress_enabled: Whether to enable progress tracking.
    """

    def __init__(
        self,
        data_dir: Path,
        out_path: Path,
        beam: BeamConfig | None = None,
        extra_checkpoints: Sequence[Path] = (),
        progress_enabled: bool = True,
    ) -> None:
        super().__init__(progress_enabled=progress_enabled)
        self.data_dir = data_dir
        self.out_path = out_path
        self.beam = beam or BeamConfig()
        self.extra_checkpoints = list(extra_checkpoints)

    def process(self, data: Path) -> Path:
        logger.info(f"Evaluating {data} on the test split")
        checkpoints = [data, *self.extra_checkpoints]
        self.init_progress(len(checkpoints), "Evaluating")
        try:
            eval_run(checkpoints, self.data_dir, self.beam, self.out_path)
            self.update_progress(len(checkpoints))
            return self.out_path
        except LabError:
            raise
        except Exception as e:
            logger.error(f"Evaluation failed: {e!s}")
            raise EvaluationError(f"Failed to evaluate {data}: {e!s}") from e
        finally:
            self.close_progress()
