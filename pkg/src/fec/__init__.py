"""Factual error correction pipeline: retrieval, masking, correction and
evaluation (automated metrics plus a blind human-rating service)."""

from .core import NGramMultiset, TokenSeq, VerdictLabel, ngrams, tokenize
from .metrics import SariScore, bleu_k, pearson, rouge_n, sari, spearman

__all__ = [
    "NGramMultiset",
    "SariScore",
    "TokenSeq",
    "VerdictLabel",
    "bleu_k",
    "ngrams",
    "pearson",
    "rouge_n",
    "sari",
    "spearman",
    "tokenize",
]

__version__ = "0.1.0"
