"""Correctors: produce a corrected claim from a masked claim plus evidence.

Built-ins: an evidence-span-fill beam search that never invents tokens, and
an LM-only fill baseline. External seq2seq correctors attach over a
newline-delimited JSON wire protocol (see :class:`ExternalCorrectorClient`).
"""

from __future__ import annotations

import json
import math
import socket
import warnings
from dataclasses import dataclass, field

from .core import VerdictLabel, tokenize
from .lm import NGramLM, argmax_token, score_sequence
from .maskers import MASK_TOKEN, MaskedClaim
from .retrieval import EvidenceSet


@dataclass
class TrainingPair:
    id: int
    masked_claim: str
    evidence_texts: list[str]
    target: str

    def to_json(self) -> str:
        return json.dumps(
            {"id": self.id, "masked_claim": self.masked_claim, "evidence": self.evidence_texts, "target": self.target},
            ensure_ascii=False,
        )


@dataclass
class SpanFill:
    """One mask-run fill: the chosen evidence span, or an LM token."""

    run_start: int
    run_length: int
    tokens: tuple[str, ...]
    source: str  # passage id, or "lm", or "" for an empty-span deletion


@dataclass
class CorrectionResult:
    id: int
    correction: str
    provenance: str
    fills: list[SpanFill] = field(default_factory=list)


def gen_training_pairs(records, masker, retriever, labels=(VerdictLabel.SUPPORTS,)):
    """Yield one reconstruction pair per record: the masked claim, retrieved
    evidence and the unmasked claim as target. NOT_ENOUGH_INFO records are
    skipped with a warning count; the label filter defaults to SUPPORTS only.
    """
    skipped_nei = 0
    for rec in records:
        if rec.label is VerdictLabel.NOT_ENOUGH_INFO:
            skipped_nei += 1
            continue
        if rec.label not in labels:
            continue
        evidence = retriever(rec.claim)
        masked = masker(rec.claim, evidence)
        yield TrainingPair(
            id=rec.id,
            masked_claim=masked.rendered(),
            evidence_texts=evidence.texts() if isinstance(evidence, EvidenceSet) else list(evidence),
            target=rec.claim,
        )
    if skipped_nei:
        warnings.warn(f"skipped {skipped_nei} NOT_ENOUGH_INFO records during pair generation")


def _mask_runs(mask) -> list[tuple[int, int]]:
    runs, start = [], None
    for i, m in enumerate(mask):
        if m and start is None:
            start = i
        elif not m and start is not None:
            runs.append((start, i - start))
            start = None
    if start is not None:
        runs.append((start, len(mask) - start))
    return runs


def _candidate_spans(evidence, max_span: int):
    """All contiguous evidence spans of length 0..max_span, in deterministic
    (passage id, offset, length) order, the empty span first."""
    spans = [((), ("", -1, 0))]
    passages = []
    if isinstance(evidence, EvidenceSet):
        passages = [(p.passage_id, p.tokens) for p, _ in evidence.passages]
    elif evidence:
        passages = [(f"ev#{i}", tuple(tokenize(t).tokens)) for i, t in enumerate(evidence)]
    for pid, toks in sorted(passages):
        for offset in range(len(toks)):
            for length in range(1, min(max_span, len(toks) - offset) + 1):
                spans.append((toks[offset : offset + length], (pid, offset, length)))
    return spans


def _is_content(token: str) -> bool:
    return any(ch.isalnum() for ch in token)


def _composite_score(tokens, lm: NGramLM, evidence_tokens: set[str], weight: float) -> float:
    if not tokens:
        return 0.0
    lm_part = math.exp(score_sequence(lm, tokens) / len(tokens))  # geometric-mean probability
    content = [t for t in tokens if _is_content(t)]
    support = (sum(1 for t in content if t in evidence_tokens) / len(content)) if content else 1.0
    return weight * lm_part + (1 - weight) * support


def correct_evidence_fill(
    masked: MaskedClaim,
    evidence,
    lm: NGramLM,
    beam: int = 8,
    max_span: int = 6,
    lm_weight: float = 0.5,
    result_id: int = 0,
) -> CorrectionResult:
    """Replace each maximal run of masks with an evidence token span.

    Beam search proceeds left to right over mask runs; every candidate fill is
    a verbatim contiguous span from a retrieved passage (or the empty span),
    so the corrector cannot hallucinate. Completions score
    lm_weight * geometric-mean LM probability + (1 - lm_weight) * fraction of
    content tokens present in the evidence; ties break by span provenance.
    """
    runs = _mask_runs(masked.mask)
    if not runs:
        return CorrectionResult(id=result_id, correction=" ".join(masked.tokens), provenance="evidence_fill")

    if isinstance(evidence, EvidenceSet):
        ev_tokens = evidence.token_union()
    else:
        ev_tokens = {t for text in (evidence or []) for t in tokenize(text).tokens}
    spans = _candidate_spans(evidence, max_span)

    # beam entries: (tokens so far, fills, tie-break key)
    beams: list[tuple[tuple[str, ...], list[SpanFill], tuple]] = [((), [], ())]
    cursor = 0
    for run_start, run_len in runs:
        prefix_gap = tuple(masked.tokens[cursor:run_start])
        extended = []
        for toks_so_far, fills, key in beams:
            base = toks_so_far + prefix_gap
            for span_tokens, span_key in spans:
                cand = base + span_tokens
                fill = SpanFill(
                    run_start=run_start,
                    run_length=run_len,
                    tokens=span_tokens,
                    source=span_key[0] if span_tokens else "",
                )
                extended.append((cand, fills + [fill], key + (span_key,)))
        extended.sort(key=lambda e: (-_composite_score(e[0], lm, ev_tokens, lm_weight), e[2]))
        beams = extended[:beam]
        cursor = run_start + run_len
    tail = tuple(masked.tokens[cursor:])
    finals = [(toks + tail, fills, key) for toks, fills, key in beams]
    finals.sort(key=lambda e: (-_composite_score(e[0], lm, ev_tokens, lm_weight), e[2]))
    best_tokens, best_fills, _ = finals[0]
    if not best_tokens:
        # degenerate case: everything masked and no evidence to fill from;
        # fall back to the input tokens rather than emit an empty correction
        return CorrectionResult(id=result_id, correction=" ".join(masked.tokens), provenance="evidence_fill")
    return CorrectionResult(
        id=result_id,
        correction=" ".join(best_tokens),
        provenance="evidence_fill",
        fills=best_fills,
    )


def correct_lm_fill(masked: MaskedClaim, lm: NGramLM, result_id: int = 0) -> CorrectionResult:
    """Replace each masked position independently with the argmax next token
    under the left context. No evidence is used."""
    out: list[str] = []
    fills = []
    for i, (tok, m) in enumerate(zip(masked.tokens, masked.mask)):
        if not m:
            out.append(tok)
            continue
        context = tuple(out[max(0, len(out) - (lm.order - 1)) :])
        filled = argmax_token(lm, context)
        out.append(filled)
        fills.append(SpanFill(run_start=i, run_length=1, tokens=(filled,), source="lm"))
    return CorrectionResult(id=result_id, correction=" ".join(out), provenance="lm_fill", fills=fills)


def correct_copy(masked: MaskedClaim, result_id: int = 0) -> CorrectionResult:
    """Copy-input baseline: emit the claim with mask placeholders removed."""
    kept = [t for t, m in zip(masked.tokens, masked.mask) if not m]
    return CorrectionResult(id=result_id, correction=" ".join(kept or masked.tokens), provenance="copy")


# --------------------------------------------------------------------------
# Wire protocol to external correctors


class ProtocolError(RuntimeError):
    pass


@dataclass
class ItemError:
    id: int
    reason: str


class ExternalCorrectorClient:
    """Newline-delimited JSON over a byte stream (TCP).

    Request per line: {"id": int, "masked_claim": str, "evidence": [str]}.
    Response per line: {"id": int, "correction": str}, order-independent.
    A per-item timeout yields an item-level error, never a batch failure.
    """

    def __init__(self, host: str, port: int, timeout: float = 30.0):
        self.host = host
        self.port = port
        self.timeout = timeout

    def correct_batch(self, batch) -> list[CorrectionResult | ItemError]:
        """batch: iterable of (id, masked_claim_rendered, evidence_texts)."""
        items = list(batch)
        pending = {item[0] for item in items}
        results: dict[int, CorrectionResult | ItemError] = {}
        with socket.create_connection((self.host, self.port), timeout=self.timeout) as sock:
            payload = "".join(
                json.dumps({"id": i, "masked_claim": mc, "evidence": list(ev)}, ensure_ascii=False) + "\n"
                for i, mc, ev in items
            )
            sock.sendall(payload.encode("utf-8"))
            sock.shutdown(socket.SHUT_WR)
            sock.settimeout(self.timeout)
            buf = b""
            try:
                while pending:
                    chunk = sock.recv(65536)
                    if not chunk:
                        break
                    buf += chunk
                    while b"\n" in buf:
                        line, buf = buf.split(b"\n", 1)
                        if not line.strip():
                            continue
                        try:
                            obj = json.loads(line)
                            rid = int(obj["id"])
                            correction = str(obj["correction"])
                        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                            raise ProtocolError(f"malformed response line {line!r}: {exc}") from None
                        if rid not in pending:
                            raise ProtocolError(f"response for unknown or duplicate id {rid}")
                        pending.discard(rid)
                        results[rid] = CorrectionResult(id=rid, correction=correction, provenance="external")
            except socket.timeout:
                pass
        for rid in sorted(pending):
            results[rid] = ItemError(id=rid, reason="timeout waiting for response")
        return [results[item[0]] for item in items]


def serve_echo(port: int, host: str = "127.0.0.1", max_batches: int = 1):
    """Tiny loopback server (correction := masked claim) for tests and demos."""
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as srv:
        srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        srv.bind((host, port))
        srv.listen()
        for _ in range(max_batches):
            conn, _ = srv.accept()
            with conn:
                data = b""
                while True:
                    chunk = conn.recv(65536)
                    if not chunk:
                        break
                    data += chunk
                for line in data.decode("utf-8").splitlines():
                    if not line.strip():
                        continue
                    req = json.loads(line)
                    resp = {"id": req["id"], "correction": req["masked_claim"]}
                    conn.sendall((json.dumps(resp) + "\n").encode("utf-8"))
