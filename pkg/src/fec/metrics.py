"""SARI, ROUGE-N, BLEU-k and correlation statistics.

All metrics operate on lowercase token sequences (see :mod:`fec.core`) and a
single reference. N-gram comparisons use multiset semantics: intersection is
per-gram ``min`` of counts, difference is saturating subtraction.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass

from .core import TokenSeq, ngrams

Tokens = tuple[str, ...]


@dataclass(frozen=True)
class SariScore:
    keep_f1: float
    add_f1: float
    del_precision: float
    final: float


def _toks(seq) -> Tokens:
    if isinstance(seq, TokenSeq):
        return tuple(seq.tokens)
    return tuple(seq)


def _ratio(numer: int, candidate_size: int, target_size: int, *, precision: bool) -> float:
    """Zero-denominator conventions, pinned:

    - candidate and target both empty -> 1.0 (vacuous perfection);
    - candidate empty, target nonempty -> precision vacuously 1, recall 0;
    - candidate nonempty, target empty -> 0.
    """
    if candidate_size == 0 and target_size == 0:
        return 1.0
    if candidate_size == 0:
        return 1.0 if precision else 0.0
    if target_size == 0:
        return 0.0
    denom = candidate_size if precision else target_size
    return numer / denom


def _f1(p: float, r: float) -> float:
    if p + r == 0:
        return 0.0
    return 2 * p * r / (p + r)


def sari(source, output, reference) -> SariScore:
    """SARI of one correction against its source claim and single reference.

    Per n-gram order 1..4: keep = F1 over n-grams retained from the source,
    add = F1 over newly introduced n-grams, delete = precision of removed
    n-grams (precision-only: an empty delete-candidate set with a nonempty
    target scores 0). Components are the uniform mean over the four orders
    and ``final`` is the arithmetic mean of the three components.
    """
    src, out, ref = _toks(source), _toks(output), _toks(reference)
    if not ref:
        raise ValueError("SARI is undefined for an empty reference")
    keep_scores, add_scores, del_scores = [], [], []
    for n in range(1, 5):
        s = ngrams(src, n).counts
        o = ngrams(out, n).counts
        r = ngrams(ref, n).counts
        keep_cand = s & o
        keep_target = s & r
        keep_good = keep_cand & r
        kp = _ratio(sum(keep_good.values()), sum(keep_cand.values()), sum(keep_target.values()), precision=True)
        kr = _ratio(sum(keep_good.values()), sum(keep_cand.values()), sum(keep_target.values()), precision=False)
        keep_scores.append(_f1(kp, kr))

        add_cand = o - s
        add_target = r - s
        add_good = add_cand & add_target
        ap = _ratio(sum(add_good.values()), sum(add_cand.values()), sum(add_target.values()), precision=True)
        ar = _ratio(sum(add_good.values()), sum(add_cand.values()), sum(add_target.values()), precision=False)
        add_scores.append(_f1(ap, ar))

        del_cand = s - o
        del_target = s - r
        del_good = del_cand & del_target
        # Delete is precision-only, so the vacuous-precision rule does not
        # apply: no deletions made while some were required scores 0.
        if sum(del_cand.values()) == 0 and sum(del_target.values()) == 0:
            del_scores.append(1.0)
        elif sum(del_cand.values()) == 0:
            del_scores.append(0.0)
        else:
            del_scores.append(sum(del_good.values()) / sum(del_cand.values()))

    keep_f1 = sum(keep_scores) / 4
    add_f1 = sum(add_scores) / 4
    del_precision = sum(del_scores) / 4
    return SariScore(
        keep_f1=keep_f1,
        add_f1=add_f1,
        del_precision=del_precision,
        final=(keep_f1 + add_f1 + del_precision) / 3,
    )


def rouge_n(output, reference, n: int) -> float:
    """Clipped n-gram recall of the output against the reference."""
    if n not in (1, 2):
        raise ValueError(f"rouge_n supports n in {{1, 2}}, got {n}")
    out, ref = _toks(output), _toks(reference)
    if not ref:
        raise ValueError("ROUGE is undefined for an empty reference")
    r = ngrams(ref, n).counts
    if sum(r.values()) == 0:
        warnings.warn(f"reference shorter than n={n}; ROUGE-{n} defined as 0")
        return 0.0
    o = ngrams(out, n).counts
    return sum((o & r).values()) / sum(r.values())


def bleu_k(output, reference, k: int) -> float:
    """BLEU with orders 1..k: geometric mean of clipped precisions times the
    brevity penalty exp(1 - r/c) for c < r."""
    if k not in (1, 2):
        raise ValueError(f"bleu_k supports k in {{1, 2}}, got {k}")
    out, ref = _toks(output), _toks(reference)
    if not out:
        return 0.0
    log_prec = 0.0
    for n in range(1, k + 1):
        o = ngrams(out, n).counts
        r = ngrams(ref, n).counts
        total = sum(o.values())
        if total == 0:
            return 0.0
        clipped = sum((o & r).values())
        if clipped == 0:
            return 0.0
        log_prec += math.log(clipped / total) / k
    c, r_len = len(out), len(ref)
    bp = 1.0 if c >= r_len else math.exp(1 - r_len / c)
    return bp * math.exp(log_prec)


def pearson(x, y) -> float:
    x, y = list(map(float, x)), list(map(float, y))
    if len(x) != len(y) or len(x) < 3:
        raise ValueError("pearson needs two equal-length vectors of size >= 3")
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    if sxx == 0 or syy == 0:
        raise ValueError("pearson undefined: zero variance")
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    return sxy / math.sqrt(sxx * syy)


def _average_ranks(values) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for idx in order[i : j + 1]:
            ranks[idx] = avg
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    """Pearson correlation of average ranks (ties share the mean rank)."""
    return pearson(_average_ranks(list(x)), _average_ranks(list(y)))


def correlation_report(
    system_metric_means: dict[str, dict[str, float]],
    system_human_means: dict[str, dict[str, float]],
) -> dict[str, dict[str, float | str]]:
    """Pearson r of each automated metric against each human question, across
    systems. Cells where the correlation is undefined carry the reason."""
    systems = sorted(set(system_metric_means) & set(system_human_means))
    if len(systems) < 3:
        raise ValueError("correlation_report needs >= 3 systems present in both inputs")
    metric_names = sorted({m for s in systems for m in system_metric_means[s]})
    question_names = sorted({q for s in systems for q in system_human_means[s]})
    table: dict[str, dict[str, float | str]] = {}
    for metric in metric_names:
        row: dict[str, float | str] = {}
        for question in question_names:
            xs = [system_metric_means[s][metric] for s in systems]
            ys = [system_human_means[s][question] for s in systems]
            try:
                row[question] = pearson(xs, ys)
            except ValueError as exc:
                row[question] = f"n/a: {exc}"
        table[metric] = row
    return table
