"""Passage chunking, inverted index and two-stage lexical evidence retrieval.

Stage 1 ranks whole pages with BM25 and keeps the top P; stage 2 ranks the
passages of those pages, again with BM25, and returns the top k. The two-stage
restriction-then-rank shape mirrors page-level candidate generation followed
by passage scoring.
"""

from __future__ import annotations

import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from .core import TokenSeq, tokenize

BM25_K1 = 1.2
BM25_B = 0.75
DEFAULT_WINDOW = 50
DEFAULT_K = 2
DEFAULT_PAGE_FANOUT = 5

INDEX_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Passage:
    page_id: str
    passage_index: int
    tokens: tuple[str, ...]
    char_span: tuple[int, int] = (0, 0)

    @property
    def passage_id(self) -> str:
        return f"{self.page_id}#{self.passage_index}"

    def text(self) -> str:
        return " ".join(self.tokens)


@dataclass
class EvidenceSet:
    k: int
    passages: list[tuple[Passage, float]] = field(default_factory=list)

    def token_union(self) -> set[str]:
        return {t for p, _ in self.passages for t in p.tokens}

    def texts(self) -> list[str]:
        return [p.text() for p, _ in self.passages]


def chunk(page_id: str, document: str, window: int = DEFAULT_WINDOW) -> list[Passage]:
    """Tile a document into non-overlapping passages of at most ``window`` tokens."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    toks = tokenize(document).tokens
    lowered = document.lower()
    spans: list[tuple[int, int]] = []
    cursor = 0
    for tok in toks:
        found = lowered.find(tok, cursor)
        if found < 0:  # token altered by NFC normalization; fall back to cursor
            found = cursor
        spans.append((found, found + len(tok)))
        cursor = found + len(tok)
    passages = []
    for idx, start in enumerate(range(0, len(toks), window)):
        window_toks = toks[start : start + window]
        window_spans = spans[start : start + window]
        passages.append(
            Passage(
                page_id=page_id,
                passage_index=idx,
                tokens=window_toks,
                char_span=(window_spans[0][0], window_spans[-1][1]),
            )
        )
    return passages


class InvertedIndex:
    """Immutable-after-build BM25 index over passages, with page-level
    aggregate statistics for the first retrieval stage."""

    def __init__(self) -> None:
        self.passages: dict[str, Passage] = {}
        self.postings: dict[str, list[tuple[str, int]]] = {}
        self.doc_len: dict[str, int] = {}
        self.n_passages = 0
        self.avgdl = 0.0
        # page-level aggregates
        self.page_tf: dict[str, Counter] = {}
        self.page_len: dict[str, int] = {}
        self.page_df: Counter = Counter()
        self.n_pages = 0
        self.avg_page_len = 0.0

    def df(self, term: str) -> int:
        return len(self.postings.get(term, ()))


def build_index(passages: list[Passage]) -> InvertedIndex:
    index = InvertedIndex()
    postings: dict[str, dict[str, int]] = defaultdict(dict)
    for p in passages:
        if p.passage_id in index.passages:
            raise ValueError(f"duplicate passage id: {p.passage_id}")
        index.passages[p.passage_id] = p
        index.doc_len[p.passage_id] = len(p.tokens)
        for term, tf in Counter(p.tokens).items():
            postings[term][p.passage_id] = tf
        page_tf = index.page_tf.setdefault(p.page_id, Counter())
        page_tf.update(p.tokens)
        index.page_len[p.page_id] = index.page_len.get(p.page_id, 0) + len(p.tokens)
    index.postings = {t: sorted(d.items()) for t, d in postings.items()}
    index.n_passages = len(index.passages)
    index.avgdl = (sum(index.doc_len.values()) / index.n_passages) if index.n_passages else 0.0
    index.n_pages = len(index.page_tf)
    index.avg_page_len = (sum(index.page_len.values()) / index.n_pages) if index.n_pages else 0.0
    for page, tf in index.page_tf.items():
        for term in tf:
            index.page_df[term] += 1
    return index


def bm25_score(query_terms, tf: Counter, dl: int, avgdl: float, n_docs: int, df_fn) -> float:
    """Okapi BM25 with the nonnegative idf variant ln(1 + (N - df + .5)/(df + .5));
    a document sharing no query term scores exactly 0."""
    score = 0.0
    for term in set(query_terms):
        f = tf.get(term, 0)
        if f == 0:
            continue
        df = df_fn(term)
        idf = math.log(1 + (n_docs - df + 0.5) / (df + 0.5))
        denom = f + BM25_K1 * (1 - BM25_B + BM25_B * dl / avgdl)
        score += idf * f * (BM25_K1 + 1) / denom
    return score


def retrieve(
    index: InvertedIndex,
    claim: str | TokenSeq | tuple[str, ...],
    k: int = DEFAULT_K,
    page_fanout: int = DEFAULT_PAGE_FANOUT,
) -> EvidenceSet:
    """Top-k passages for a claim via page restriction then passage ranking.

    Ties at both stages break lexicographically, pages by page_id and
    passages by (page_id, passage_index)."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if isinstance(claim, str):
        terms = tokenize(claim).tokens
    elif isinstance(claim, TokenSeq):
        terms = claim.tokens
    else:
        terms = tuple(claim)
    result = EvidenceSet(k=k)
    if not terms or index.n_passages == 0:
        return result

    page_scores = []
    for page in index.page_tf:
        s = bm25_score(
            terms, index.page_tf[page], index.page_len[page],
            index.avg_page_len, index.n_pages, lambda t: index.page_df[t],
        )
        page_scores.append((-s, page))
    page_scores.sort()
    kept_pages = {page for _, page in page_scores[:page_fanout]}

    scored = []
    for pid, passage in index.passages.items():
        if passage.page_id not in kept_pages:
            continue
        tf = Counter(passage.tokens)
        s = bm25_score(terms, tf, index.doc_len[pid], index.avgdl, index.n_passages, index.df)
        scored.append((-s, passage.page_id, passage.passage_index, passage, s))
    scored.sort(key=lambda item: (item[0], item[1], item[2]))
    result.passages = [(item[3], item[4]) for item in scored[:k]]
    return result


def recall_at_k(records, index: InvertedIndex, k: int = DEFAULT_K, page_fanout: int = DEFAULT_PAGE_FANOUT) -> float:
    """Fraction of records whose retrieved passages cover >= 1 gold page."""
    if not records:
        return 0.0
    hits = 0
    for rec in records:
        gold_pages = {page for page, _ in rec.evidence_refs}
        ev = retrieve(index, tokenize(rec.claim), k=k, page_fanout=page_fanout)
        got_pages = {p.page_id for p, _ in ev.passages}
        if gold_pages & got_pages:
            hits += 1
    return hits / len(records)


def save_index(index: InvertedIndex, path: str | Path) -> None:
    payload = {
        "format_version": INDEX_FORMAT_VERSION,
        "passages": [
            {"page": p.page_id, "idx": p.passage_index, "tokens": list(p.tokens), "span": list(p.char_span)}
            for p in sorted(index.passages.values(), key=lambda p: (p.page_id, p.passage_index))
        ],
    }
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_index(path: str | Path) -> InvertedIndex:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format_version") != INDEX_FORMAT_VERSION:
        raise ValueError(f"unsupported index file version: {payload.get('format_version')!r}")
    passages = [
        Passage(page_id=d["page"], passage_index=d["idx"], tokens=tuple(d["tokens"]), char_span=tuple(d["span"]))
        for d in payload["passages"]
    ]
    return build_index(passages)
