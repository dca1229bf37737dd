"""CIDEr-D, BLEU-4 and ROUGE-L with EOS-as-a-word tokenization."""

from .bleu import bleu4, corpus_bleu, sentence_bleu
from .cider import cider_d, cider_d_sentence
from .ngrams import NGramStats, ngram_counts, tokenize_for_reward
from .reward import RewardFn, RewardScorer, evaluate_corpus, parse_kind, reward_fn
from .rouge import lcs_length, rouge_l, sentence_rouge_l
from .types import MetricKind, MetricScore

__all__ = [
    "MetricKind",
    "MetricScore",
    "NGramStats",
    "RewardFn",
    "RewardScorer",
    "bleu4",
    "cider_d",
    "cider_d_sentence",
    "corpus_bleu",
    "evaluate_corpus",
    "lcs_length",
    "ngram_counts",
    "parse_kind",
    "reward_fn",
    "rouge_l",
    "sentence_bleu",
    "sentence_rouge_l",
    "tokenize_for_reward",
]
