import itertools
import math
import random
import socket
import threading
import time

import pytest

from fec.core import VerdictLabel, tokenize
from fec.corrector import (
    ExternalCorrectorClient,
    ItemError,
    correct_copy,
    correct_evidence_fill,
    correct_lm_fill,
    gen_training_pairs,
    serve_echo,
)
from fec.dataset import ClaimRecord, ToyWorld, synth_generate
from fec.lm import argmax_token, score_sequence, train_lm
from fec.maskers import MaskedClaim, mask_heuristic
from fec.retrieval import build_index, chunk, retrieve

CORPUS = [tokenize("paris is the capital of france").tokens] * 5 + [
    tokenize("paris is a large city in france").tokens
] * 2


@pytest.fixture(scope="module")
def lm():
    return train_lm(CORPUS, order=3, alpha=0.1, min_count=1)


def _oracle_fill(masked, evidence_texts, lm, max_span=6, lm_weight=0.5):
    """Exhaustive single-run oracle: enumerate every evidence span (plus the
    empty span) for one mask run and maximize the composite score."""
    runs = []
    start = None
    for i, m in enumerate(masked.mask):
        if m and start is None:
            start = i
        elif not m and start is not None:
            runs.append((start, i - start))
            start = None
    if start is not None:
        runs.append((start, len(masked.mask) - start))
    assert len(runs) == 1
    run_start, run_len = runs[0]

    ev_tokens = {t for text in evidence_texts for t in tokenize(text).tokens}
    spans = [((), ("", -1, 0))]
    for pid, text in sorted((f"ev#{i}", t) for i, t in enumerate(evidence_texts)):
        toks = tokenize(text).tokens
        for off in range(len(toks)):
            for ln in range(1, min(max_span, len(toks) - off) + 1):
                spans.append((toks[off : off + ln], (pid, off, ln)))

    def score(tokens):
        if not tokens:
            return 0.0
        lm_part = math.exp(score_sequence(lm, tokens) / len(tokens))
        content = [t for t in tokens if any(ch.isalnum() for ch in t)]
        support = sum(1 for t in content if t in ev_tokens) / len(content) if content else 1.0
        return lm_weight * lm_part + (1 - lm_weight) * support

    best = None
    for span, key in spans:
        full = masked.tokens[:run_start] + span + masked.tokens[run_start + run_len :]
        s = score(full)
        if best is None or s > best[0] or (s == best[0] and (key,) < best[1]):
            best = (s, (key,), full)
    return " ".join(best[2])


class TestGenTrainingPairs:
    RECORDS = [
        ClaimRecord(1, "paris is the capital of france", "paris is the capital of france",
                    "paraphrase", VerdictLabel.SUPPORTS, [("paris", 0)], "train"),
        ClaimRecord(2, "berlin is the capital of france", "berlin is the capital of germany",
                    "substitute_entity", VerdictLabel.REFUTES, [("berlin", 0)], "train"),
        ClaimRecord(3, "something unverifiable", "", "none",
                    VerdictLabel.NOT_ENOUGH_INFO, [], "train"),
    ]

    @staticmethod
    def retriever(claim):
        return ["paris is the capital of france"]

    @staticmethod
    def masker(claim, evidence):
        return mask_heuristic(tokenize(claim).tokens, evidence)

    def test_target_is_unmasked_claim(self):
        with pytest.warns(UserWarning, match="NOT_ENOUGH_INFO"):
            pairs = list(gen_training_pairs(self.RECORDS, self.masker, self.retriever))
        assert len(pairs) == 1
        assert pairs[0].target == "paris is the capital of france"
        assert "[MASK]" not in pairs[0].target

    def test_zero_mask_pair_still_emitted(self):
        with pytest.warns(UserWarning):
            pairs = list(gen_training_pairs(self.RECORDS, self.masker, self.retriever))
        assert pairs[0].masked_claim == "paris is the capital of france"

    def test_label_filter_includes_refutes_when_asked(self):
        with pytest.warns(UserWarning):
            pairs = list(
                gen_training_pairs(
                    self.RECORDS, self.masker, self.retriever,
                    labels=(VerdictLabel.SUPPORTS, VerdictLabel.REFUTES),
                )
            )
        assert [p.id for p in pairs] == [1, 2]

    def test_deterministic(self):
        with pytest.warns(UserWarning):
            a = [p.to_json() for p in gen_training_pairs(self.RECORDS, self.masker, self.retriever)]
        with pytest.warns(UserWarning):
            b = [p.to_json() for p in gen_training_pairs(self.RECORDS, self.masker, self.retriever)]
        assert a == b


class TestEvidenceFill:
    def test_capital_fill_matches_exhaustive_oracle(self, lm):
        masked = MaskedClaim(
            tokens=tokenize("paris is the capital of germany").tokens,
            mask=(False, False, False, False, False, True),
        )
        evidence = ["paris is the capital of france"]
        got = correct_evidence_fill(masked, evidence, lm)
        assert got.correction == _oracle_fill(masked, evidence, lm)
        assert got.correction == "paris is the capital of france"

    def test_identity_when_nothing_masked(self, lm):
        toks = tokenize("berlin is the capital of germany").tokens
        masked = MaskedClaim(tokens=toks, mask=(False,) * len(toks))
        got = correct_evidence_fill(masked, ["whatever"], lm)
        assert got.correction == " ".join(toks)

    def test_empty_evidence_prefers_empty_span(self, lm):
        masked = MaskedClaim(
            tokens=("paris", "is", "nice"), mask=(False, False, True)
        )
        got = correct_evidence_fill(masked, [], lm)
        assert got.correction == "paris is"

    def test_all_masked_no_evidence_falls_back_to_input(self, lm):
        masked = MaskedClaim(tokens=("a", "b"), mask=(True, True))
        got = correct_evidence_fill(masked, [], lm)
        assert got.correction == "a b"

    def test_random_single_run_instances_match_oracle(self, lm):
        rng = random.Random(5)
        evidence = ["paris is the capital of france", "berlin is a large city in germany"]
        vocab = ["paris", "berlin", "is", "the", "capital", "of", "france", "germany", "city", "large"]
        for _ in range(60):
            n = rng.randrange(2, 8)
            toks = tuple(rng.choice(vocab) for _ in range(n))
            start = rng.randrange(n)
            ln = rng.randrange(1, min(3, n - start) + 1)
            mask = tuple(start <= i < start + ln for i in range(n))
            masked = MaskedClaim(tokens=toks, mask=mask)
            # a beam wider than the candidate-span count makes the single-run
            # search exhaustive, so the brute-force oracle must agree exactly
            got = correct_evidence_fill(masked, evidence, lm, beam=500)
            assert got.correction == _oracle_fill(masked, evidence, lm)

    def test_span_soundness_on_toy_world(self, lm):
        # every filled token must occur verbatim in the retrieved evidence
        world = ToyWorld(seed=7)
        records, corpus = synth_generate(world, 200, seed=7)
        passages = [p for pid, doc in sorted(corpus.items()) for p in chunk(pid, doc)]
        index = build_index(passages)
        toy_lm = train_lm([tokenize(d).tokens for d in corpus.values()], order=3, min_count=1)
        checked = 0
        for rec in records:
            if checked >= 500:
                break
            ev = retrieve(index, rec.claim, k=2)
            masked = mask_heuristic(tokenize(rec.claim).tokens, ev.texts())
            result = correct_evidence_fill(masked, ev, toy_lm)
            ev_union = ev.token_union()
            for fill in result.fills:
                for tok in fill.tokens:
                    assert tok in ev_union
            assert result.correction.strip() != ""
            checked += 1
        assert checked >= 100

    def test_reconstruction_rate_on_supports(self, lm):
        world = ToyWorld(seed=7)
        records, corpus = synth_generate(world, 300, seed=7)
        passages = [p for pid, doc in sorted(corpus.items()) for p in chunk(pid, doc)]
        index = build_index(passages)
        toy_lm = train_lm([tokenize(d).tokens for d in corpus.values()], order=3, min_count=1)
        supports = [r for r in records if r.label is VerdictLabel.SUPPORTS]
        assert len(supports) >= 50
        hits = 0
        for rec in supports:
            ev = retrieve(index, rec.claim, k=2)
            masked = mask_heuristic(tokenize(rec.claim).tokens, ev.texts())
            result = correct_evidence_fill(masked, ev, toy_lm)
            if result.correction == " ".join(tokenize(rec.claim).tokens):
                hits += 1
        assert hits / len(supports) >= 0.95


class TestLmFill:
    def test_identity_when_nothing_masked(self, lm):
        toks = ("paris", "is", "nice")
        got = correct_lm_fill(MaskedClaim(tokens=toks, mask=(False,) * 3), lm)
        assert got.correction == "paris is nice"

    def test_hand_argmax_chain(self, lm):
        masked = MaskedClaim(
            tokens=tokenize("paris is the capital of france").tokens,
            mask=(False, False, False, True, False, False),
        )
        got = correct_lm_fill(masked, lm)
        expected = argmax_token(lm, ("is", "the"))
        assert got.correction.split()[3] == expected

    def test_same_length_output(self, lm):
        masked = MaskedClaim(tokens=("a", "b", "c", "d"), mask=(True, False, True, False))
        got = correct_lm_fill(masked, lm)
        assert len(got.correction.split()) == 4


class TestCopyBaseline:
    def test_drops_masked_tokens(self):
        got = correct_copy(MaskedClaim(tokens=("a", "b", "c"), mask=(False, True, False)))
        assert got.correction == "a c"

    def test_all_masked_falls_back_to_input(self):
        got = correct_copy(MaskedClaim(tokens=("a", "b"), mask=(True, True)))
        assert got.correction == "a b"


def _free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


class TestWireProtocol:
    def test_echo_roundtrip(self):
        port = _free_port()
        t = threading.Thread(target=serve_echo, args=(port,), daemon=True)
        t.start()
        time.sleep(0.1)
        client = ExternalCorrectorClient("127.0.0.1", port, timeout=5.0)
        batch = [(1, "a [MASK] c", ["ev one"]), (2, "x [MASK]", [])]
        out = client.correct_batch(batch)
        assert [r.id for r in out] == [1, 2]
        assert out[0].correction == "a [MASK] c"
        assert out[1].correction == "x [MASK]"
        t.join(timeout=2)

    def test_out_of_order_ids_matched(self):
        port = _free_port()

        def reversed_server():
            with socket.socket() as srv:
                srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
                srv.bind(("127.0.0.1", port))
                srv.listen()
                conn, _ = srv.accept()
                with conn:
                    data = b""
                    while chunk := conn.recv(65536):
                        data += chunk
                    lines = [l for l in data.decode().splitlines() if l.strip()]
                    import json as _json

                    for line in reversed(lines):
                        req = _json.loads(line)
                        conn.sendall(
                            (_json.dumps({"id": req["id"], "correction": f"fixed {req['id']}"}) + "\n").encode()
                        )

        t = threading.Thread(target=reversed_server, daemon=True)
        t.start()
        time.sleep(0.1)
        client = ExternalCorrectorClient("127.0.0.1", port, timeout=5.0)
        out = client.correct_batch([(10, "a", []), (20, "b", []), (30, "c", [])])
        assert [(r.id, r.correction) for r in out] == [
            (10, "fixed 10"),
            (20, "fixed 20"),
            (30, "fixed 30"),
        ]
        t.join(timeout=2)

    def test_timeout_yields_item_errors_not_batch_failure(self):
        port = _free_port()

        def half_server():
            with socket.socket() as srv:
                srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
                srv.bind(("127.0.0.1", port))
                srv.listen()
                conn, _ = srv.accept()
                with conn:
                    data = b""
                    while chunk := conn.recv(65536):
                        data += chunk
                    import json as _json

                    line = [l for l in data.decode().splitlines() if l.strip()][0]
                    req = _json.loads(line)
                    conn.sendall((_json.dumps({"id": req["id"], "correction": "ok"}) + "\n").encode())
                    time.sleep(3)

        t = threading.Thread(target=half_server, daemon=True)
        t.start()
        time.sleep(0.1)
        client = ExternalCorrectorClient("127.0.0.1", port, timeout=0.8)
        out = client.correct_batch([(1, "a", []), (2, "b", [])])
        assert out[0].correction == "ok"
        assert isinstance(out[1], ItemError)
        assert out[1].id == 2
