"""Count-based n-gram language model with add-alpha smoothing.

Supplies token surprisal for the surprisal masker and sequence scoring /
fill candidates for the built-in correctors. Left-context only: surprisal of
token i conditions on the preceding (order - 1) tokens with begin padding.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .core import TokenSeq

BOS = "<s>"
UNK = "<unk>"

LM_FORMAT_VERSION = 1


@dataclass
class NGramLM:
    order: int = 3
    alpha: float = 0.1
    vocab: frozenset[str] = frozenset()
    # context_counts[k][ctx] and continuation_counts[k][(ctx, w)] for k = len(ctx)
    context_counts: dict[int, Counter] = field(default_factory=dict)
    continuation_counts: dict[int, Counter] = field(default_factory=dict)

    def _norm(self, token: str) -> str:
        return token if token in self.vocab or token == BOS else UNK

    def prob(self, token: str, context: tuple[str, ...]) -> float:
        """Add-alpha conditional probability over vocab + UNK."""
        ctx = tuple(self._norm(t) for t in context[-(self.order - 1):]) if self.order > 1 else ()
        w = self._norm(token)
        k = len(ctx)
        v = len(self.vocab) + 1  # + UNK
        c_ctx = self.context_counts.get(k, Counter()).get(ctx, 0)
        c_cont = self.continuation_counts.get(k, Counter()).get((ctx, w), 0)
        return (c_cont + self.alpha) / (c_ctx + self.alpha * v)

    def is_known(self, token: str) -> bool:
        return token in self.vocab


def train_lm(corpus, order: int = 3, alpha: float = 0.1, min_count: int = 2) -> NGramLM:
    """Train on an iterable of token sequences.

    Tokens seen fewer than ``min_count`` times collapse to UNK (count-1
    thresholding at the default).
    """
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    if alpha <= 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    seqs = [tuple(s.tokens if isinstance(s, TokenSeq) else s) for s in corpus]
    seqs = [s for s in seqs if s]
    if not seqs:
        raise ValueError("cannot train a language model on an empty corpus")

    raw = Counter(t for s in seqs for t in s)
    vocab = frozenset(t for t, c in raw.items() if c >= min_count)

    lm = NGramLM(order=order, alpha=alpha, vocab=vocab)
    k = order - 1
    lm.context_counts[k] = Counter()
    lm.continuation_counts[k] = Counter()
    for seq in seqs:
        padded = (BOS,) * k + tuple(t if t in vocab else UNK for t in seq)
        for i in range(k, len(padded)):
            ctx = padded[i - k : i]
            lm.context_counts[k][ctx] += 1
            lm.continuation_counts[k][(ctx, padded[i])] += 1
    return lm


def token_surprisals(lm: NGramLM, seq) -> list[float]:
    """Per-token surprisal in nats, -ln p(token | preceding context)."""
    toks = tuple(seq.tokens if isinstance(seq, TokenSeq) else seq)
    if not toks:
        raise ValueError("token_surprisals needs a nonempty sequence")
    k = lm.order - 1
    out = []
    for i, tok in enumerate(toks):
        context = (BOS,) * max(0, k - i) + toks[max(0, i - k) : i]
        out.append(-math.log(lm.prob(tok, context)))
    return out


def score_sequence(lm: NGramLM, seq) -> float:
    """Total log-probability; equals the negated sum of token surprisals."""
    return -sum(token_surprisals(lm, seq))


def argmax_token(lm: NGramLM, context: tuple[str, ...]) -> str:
    """Most probable next vocabulary token, ties broken alphabetically."""
    best = max(sorted(lm.vocab), key=lambda w: lm.prob(w, context), default=UNK)
    return best


def save_lm(lm: NGramLM, path: str | Path) -> None:
    k = lm.order - 1
    payload = {
        "format_version": LM_FORMAT_VERSION,
        "order": lm.order,
        "alpha": lm.alpha,
        "vocab": sorted(lm.vocab),
        "contexts": [[list(ctx), c] for ctx, c in sorted(lm.context_counts.get(k, {}).items())],
        "continuations": [[list(ctx), w, c] for (ctx, w), c in sorted(lm.continuation_counts.get(k, {}).items())],
    }
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_lm(path: str | Path) -> NGramLM:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format_version") != LM_FORMAT_VERSION:
        raise ValueError(f"unsupported LM file version: {payload.get('format_version')!r}")
    lm = NGramLM(order=payload["order"], alpha=payload["alpha"], vocab=frozenset(payload["vocab"]))
    k = lm.order - 1
    lm.context_counts[k] = Counter({tuple(ctx): c for ctx, c in payload["contexts"]})
    lm.continuation_counts[k] = Counter({(tuple(ctx), w): c for ctx, w, c in payload["continuations"]})
    return lm
