"""Compare the four masking strategies on the same corrupted claim.

Run: python3 demos/02_masker_tour.py
"""

from fec.core import tokenize
from fec.lm import train_lm
from fec.maskers import (
    MaskerConfig,
    lexical_verdict,
    mask_heuristic,
    mask_perturbation,
    mask_random,
    mask_surprisal,
)

evidence = ["the silent harbor was released in the year 1990 ."]
claim = tokenize("the silent harbor was released in the year 1994 .").tokens

lm = train_lm([tokenize(evidence[0]).tokens] * 5, order=3, min_count=1)

print("claim:   ", " ".join(claim))
print("evidence:", evidence[0])
print()

# random: a fixed fraction of positions, no signal
print("random:      ", mask_random(claim, 0.5, seed=1).rendered())

# heuristic: tokens not covered by the evidence; pinpoints the bad year
print("heuristic:   ", mask_heuristic(claim, evidence).rendered())

# surprisal: positions the evidence-trained LM finds unlikely
print("surprisal:   ", mask_surprisal(claim, lm, 0.25).rendered())

# perturbation: tokens whose removal most changes the verdict classifier
cfg = MaskerConfig(lime_features=2, seed=0)
print("perturbation:", mask_perturbation(claim, evidence, lexical_verdict, cfg).rendered())
