"""Maskers: turn (claim, evidence) into a masked claim.

Four strategies: random, heuristic evidence-diff, LM surprisal, and a
black-box perturbation explanation over a verdict classifier. A lexical
verdict scorer stands in for a trained claim/evidence classifier.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass, field

import numpy as np

from .core import TokenSeq, VerdictLabel, tokenize
from .lm import NGramLM, token_surprisals
from .retrieval import EvidenceSet

MASK_TOKEN = "[MASK]"

NEGATORS = frozenset({"not", "no", "never", "n't", "neither", "nor", "none"})

_NUMBER_RE = re.compile(r"^\d+([.,]\d+)?$")


@dataclass
class MaskedClaim:
    tokens: tuple[str, ...]
    mask: tuple[bool, ...]

    def __post_init__(self):
        if len(self.tokens) != len(self.mask):
            raise ValueError("mask length must equal token length")

    def rendered(self) -> str:
        return " ".join(MASK_TOKEN if m else t for t, m in zip(self.tokens, self.mask))

    def n_masked(self) -> int:
        return sum(self.mask)


@dataclass
class MaskerConfig:
    strategy: str = "heuristic"
    mask_ratio: float = 0.5
    lime_samples: int = 250
    lime_features: int = 6
    kernel_width: float | None = None  # None -> 0.75 * sqrt(n)
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.mask_ratio <= 1:
            raise ValueError(f"mask_ratio must be in (0, 1], got {self.mask_ratio}")
        if self.lime_samples < 10:
            raise ValueError(f"lime_samples must be >= 10, got {self.lime_samples}")
        if self.lime_features < 1:
            raise ValueError(f"lime_features must be >= 1, got {self.lime_features}")


@dataclass(frozen=True)
class VerdictScore:
    supports: float
    refutes: float
    not_enough_info: float

    def __post_init__(self):
        total = self.supports + self.refutes + self.not_enough_info
        if abs(total - 1.0) > 1e-9 or min(self.supports, self.refutes, self.not_enough_info) < 0:
            raise ValueError("verdict scores must be a probability distribution")

    def prob(self, label: VerdictLabel) -> float:
        return {
            VerdictLabel.SUPPORTS: self.supports,
            VerdictLabel.REFUTES: self.refutes,
            VerdictLabel.NOT_ENOUGH_INFO: self.not_enough_info,
        }[label]

    def argmax(self) -> VerdictLabel:
        pairs = [
            (self.supports, VerdictLabel.SUPPORTS),
            (self.refutes, VerdictLabel.REFUTES),
            (self.not_enough_info, VerdictLabel.NOT_ENOUGH_INFO),
        ]
        return max(pairs, key=lambda p: p[0])[1]


def _claim_tokens(claim) -> tuple[str, ...]:
    if isinstance(claim, TokenSeq):
        return tuple(claim.tokens)
    if isinstance(claim, str):
        return tuple(tokenize(claim).tokens)
    return tuple(claim)


def _evidence_tokens(evidence) -> set[str]:
    if evidence is None:
        return set()
    if isinstance(evidence, EvidenceSet):
        return evidence.token_union()
    out: set[str] = set()
    for item in evidence:
        out.update(tokenize(item).tokens if isinstance(item, str) else item)
    return out


def mask_random(claim, ratio: float = 0.5, seed: int = 0) -> MaskedClaim:
    """Mask exactly ceil(ratio * n) uniformly chosen positions."""
    toks = _claim_tokens(claim)
    if not toks:
        raise ValueError("cannot mask an empty claim")
    k = math.ceil(ratio * len(toks))
    chosen = set(random.Random(seed).sample(range(len(toks)), k))
    return MaskedClaim(tokens=toks, mask=tuple(i in chosen for i in range(len(toks))))


def mask_heuristic(claim, evidence) -> MaskedClaim:
    """Mask tokens absent from the union of evidence tokens."""
    toks = _claim_tokens(claim)
    ev = _evidence_tokens(evidence)
    return MaskedClaim(tokens=toks, mask=tuple(t not in ev for t in toks))


def mask_surprisal(claim, lm: NGramLM, ratio: float = 0.5) -> MaskedClaim:
    """Mask the ceil(ratio * n) highest-surprisal positions, leftmost on ties."""
    toks = _claim_tokens(claim)
    if not toks:
        raise ValueError("cannot mask an empty claim")
    surprisals = token_surprisals(lm, toks)
    k = math.ceil(ratio * len(toks))
    ranked = sorted(range(len(toks)), key=lambda i: (-surprisals[i], i))
    chosen = set(ranked[:k])
    return MaskedClaim(tokens=toks, mask=tuple(i in chosen for i in range(len(toks))))


def lexical_verdict(claim, evidence) -> VerdictScore:
    """Deterministic stand-in verdict from token overlap and contradiction cues.

    Piecewise rule:
      coverage < 0.35          -> NOT_ENOUGH_INFO (0.10, 0.10, 0.80)
      contradiction cue        -> REFUTES         (0.15, 0.70, 0.15)
      coverage == 1            -> SUPPORTS        (0.80, 0.05, 0.15)
      otherwise                -> weak SUPPORTS   (0.55, 0.15, 0.30)

    A contradiction cue is a negator present on exactly one side, or a number
    in the claim absent from the evidence while the evidence carries a number
    absent from the claim, or high coverage (>= 0.6) with a residual content
    token missing from the evidence.
    """
    toks = _claim_tokens(claim)
    ev = _evidence_tokens(evidence)
    if not toks:
        return VerdictScore(0.10, 0.10, 0.80)
    claim_set = set(toks)
    coverage = len(claim_set & ev) / len(claim_set)

    neg_mismatch = bool(claim_set & NEGATORS) != bool(ev & NEGATORS)
    claim_nums = {t for t in claim_set if _NUMBER_RE.match(t)}
    ev_nums = {t for t in ev if _NUMBER_RE.match(t)}
    num_mismatch = bool(claim_nums - ev) and bool(ev_nums - claim_set)
    missing_content = [t for t in claim_set - ev if len(t) > 3 or _NUMBER_RE.match(t)]
    residual_mismatch = coverage >= 0.6 and coverage < 1.0 and bool(missing_content)

    if coverage < 0.35:
        return VerdictScore(0.10, 0.10, 0.80)
    if neg_mismatch or num_mismatch or residual_mismatch:
        return VerdictScore(0.15, 0.70, 0.15)
    if coverage == 1.0:
        return VerdictScore(0.80, 0.05, 0.15)
    return VerdictScore(0.55, 0.15, 0.30)


class ClassifierError(RuntimeError):
    def __init__(self, sample_index: int, cause: Exception):
        super().__init__(f"classifier failed on perturbation sample {sample_index}: {cause}")
        self.sample_index = sample_index


def mask_perturbation(claim, evidence, classifier, cfg: MaskerConfig | None = None) -> MaskedClaim:
    """Black-box perturbation masker.

    Samples keep/drop vectors over claim tokens, queries the classifier on
    each perturbed claim against fixed evidence, fits a kernel-weighted ridge
    regression on the probability of the unperturbed claim's label, and masks
    the min(lime_features, n) tokens whose removal most lowers that
    probability. A flat (constant-classifier) fit falls back to the leftmost
    positions so the pipeline never stalls.
    """
    cfg = cfg or MaskerConfig(strategy="perturbation")
    toks = _claim_tokens(claim)
    if not toks:
        raise ValueError("cannot mask an empty claim")
    n = len(toks)
    n_feat = min(cfg.lime_features, n)
    rng = random.Random(cfg.seed)
    sigma = cfg.kernel_width if cfg.kernel_width is not None else 0.75 * math.sqrt(n)

    samples = [np.ones(n, dtype=float)]
    while len(samples) < cfg.lime_samples:
        samples.append(np.array([1.0 if rng.random() < 0.5 else 0.0 for _ in range(n)]))
    z = np.stack(samples)

    try:
        base = classifier(toks, evidence)
    except Exception as exc:
        raise ClassifierError(0, exc) from exc
    label = base.argmax()

    y = np.empty(len(samples))
    for i, zi in enumerate(z):
        kept = tuple(t for t, keep in zip(toks, zi) if keep)
        try:
            y[i] = classifier(kept, evidence).prob(label)
        except Exception as exc:
            raise ClassifierError(i, exc) from exc

    # cosine distance to the all-ones vector reduces to 1 - sqrt(|z| / n)
    ones_frac = z.sum(axis=1) / n
    dist = 1.0 - np.sqrt(ones_frac)
    weights = np.exp(-(dist**2) / sigma**2)

    # weighted ridge with unpenalized intercept, L2 = 1.0 on coefficients
    x = np.hstack([np.ones((len(samples), 1)), z])
    w = np.diag(weights)
    penalty = np.eye(n + 1)
    penalty[0, 0] = 0.0
    beta = np.linalg.solve(x.T @ w @ x + penalty, x.T @ w @ y)
    coef = beta[1:]

    if np.max(np.abs(coef)) < 1e-9:
        chosen = set(range(n_feat))
    else:
        # keep-coded coefficients: large positive means keeping the token
        # sustains the original verdict, i.e. removing it flips hardest
        ranked = sorted(range(n), key=lambda i: (-coef[i], i))
        chosen = set(ranked[:n_feat])
    return MaskedClaim(tokens=toks, mask=tuple(i in chosen for i in range(n)))


@dataclass
class MaskDiagnostics:
    n_instances: int
    mean_mask_fraction: float
    longest_runs: list[int] = field(default_factory=list)
    share_run_gt5: float = 0.0
    share_run_eq4: float = 0.0


def _longest_run(mask) -> int:
    best = cur = 0
    for m in mask:
        cur = cur + 1 if m else 0
        best = max(best, cur)
    return best


def mask_diagnostics(masked_claims: list[MaskedClaim]) -> MaskDiagnostics:
    """Over-erasure statistics: mask fraction, longest consecutive masked run,
    and the corpus shares of instances with runs > 5 and == 4."""
    if not masked_claims:
        return MaskDiagnostics(n_instances=0, mean_mask_fraction=0.0)
    fractions = [mc.n_masked() / len(mc.tokens) for mc in masked_claims]
    runs = [_longest_run(mc.mask) for mc in masked_claims]
    n = len(masked_claims)
    return MaskDiagnostics(
        n_instances=n,
        mean_mask_fraction=sum(fractions) / n,
        longest_runs=runs,
        share_run_gt5=sum(1 for r in runs if r > 5) / n,
        share_run_eq4=sum(1 for r in runs if r == 4) / n,
    )
