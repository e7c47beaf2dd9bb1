"""Walk one claim through the whole pipeline, printing each intermediate.

Run: python3 demos/01_pipeline_walkthrough.py
"""

from fec.core import tokenize
from fec.corrector import correct_copy, correct_evidence_fill
from fec.dataset import ToyWorld, synth_generate
from fec.lm import train_lm
from fec.maskers import mask_heuristic
from fec.metrics import sari
from fec.retrieval import build_index, chunk, retrieve

# A tiny self-contained world: people, cities and films with known facts,
# plus claims that either paraphrase those facts or corrupt them.
records, corpus = synth_generate(ToyWorld(seed=7), 200, seed=7)

passages = [p for pid, doc in sorted(corpus.items()) for p in chunk(pid, doc)]
index = build_index(passages)
lm = train_lm([tokenize(d).tokens for _, d in sorted(corpus.items())], order=3, min_count=1)

# pick a refuted claim: one token was corrupted relative to the reference
# (id 55 swaps the director's first name, a clean single-token corruption)
rec = next(r for r in records if r.id == 55)
print("claim:     ", rec.claim)
print("reference: ", rec.reference)
print("mutation:  ", rec.mutation)

evidence = retrieve(index, rec.claim, k=2)
for passage, score in evidence.passages:
    print(f"evidence:   {score:6.3f}  {passage.passage_id}  {passage.text()}")

masked = mask_heuristic(tokenize(rec.claim).tokens, evidence.texts())
print("masked:    ", masked.rendered())

corrected = correct_evidence_fill(masked, evidence, lm)
print("corrected: ", corrected.correction)

src = tokenize(rec.claim).tokens
ref = tokenize(rec.reference).tokens
out = tokenize(corrected.correction).tokens
baseline = tokenize(correct_copy(masked).correction).tokens
print()
print(f"SARI final, corrected: {sari(src, out, ref).final:.3f}")
print(f"SARI final, copy:      {sari(src, baseline, ref).final:.3f}")
