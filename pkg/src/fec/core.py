"""Tokenization and n-gram primitives shared by every other module."""

from __future__ import annotations

import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum


class VerdictLabel(str, Enum):
    SUPPORTS = "SUPPORTS"
    REFUTES = "REFUTES"
    NOT_ENOUGH_INFO = "NOT_ENOUGH_INFO"


@dataclass(frozen=True)
class TokenSeq:
    """A lowercase token sequence plus the raw text it came from."""

    tokens: tuple[str, ...]
    original: str = ""

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def __getitem__(self, i):
        return self.tokens[i]

    def detokenize(self) -> str:
        return " ".join(self.tokens)


@dataclass
class NGramMultiset:
    n: int
    counts: Counter = field(default_factory=Counter)

    def total(self) -> int:
        return sum(self.counts.values())


def tokenize(text: str) -> TokenSeq:
    """Lowercase, NFC-normalize, split on whitespace and split off punctuation.

    Deterministic and locale-independent; empty input yields an empty sequence.
    """
    normalized = unicodedata.normalize("NFC", text)
    tokens: list[str] = []
    for chunk in normalized.lower().split():
        current = ""
        for ch in chunk:
            if _is_punct(ch):
                if current:
                    tokens.append(current)
                    current = ""
                tokens.append(ch)
            else:
                current += ch
        if current:
            tokens.append(current)
    return TokenSeq(tokens=tuple(tokens), original=text)


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def ngrams(seq: TokenSeq | tuple[str, ...] | list[str], n: int) -> NGramMultiset:
    """All contiguous n-grams of ``seq`` with multiplicity, 1 <= n <= 4."""
    if not 1 <= n <= 4:
        raise ValueError(f"n-gram order must be in 1..4, got {n}")
    toks = tuple(seq.tokens if isinstance(seq, TokenSeq) else seq)
    counts = Counter(toks[i : i + n] for i in range(len(toks) - n + 1))
    return NGramMultiset(n=n, counts=counts)
