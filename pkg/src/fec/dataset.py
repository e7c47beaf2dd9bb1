"""FEC dataset loading/validation and a seeded toy-world generator.

Dataset files are UTF-8 JSON lines, one record per line with fields
{id, claim, reference, mutation, label, evidence, split}; corpus files are
JSON lines with fields {page, text}.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .core import VerdictLabel, tokenize

EXPECTED_FULL_COUNTS = {
    # (split, label) -> instance count for the full released dataset
    ("train", "SUPPORTS"): 37961,
    ("validation", "SUPPORTS"): 1477,
    ("test", "SUPPORTS"): 1593,
    ("train", "REFUTES"): 20075,
    ("validation", "REFUTES"): 2091,
    ("test", "REFUTES"): 2289,
    ("train", "NOT_ENOUGH_INFO"): 21934,
    ("validation", "NOT_ENOUGH_INFO"): 1870,
    ("test", "NOT_ENOUGH_INFO"): 2037,
}

SPLITS = ("train", "validation", "test")

MUTATIONS = ("substitute_entity", "negate", "perturb_number", "paraphrase")


class SchemaError(ValueError):
    pass


@dataclass
class ClaimRecord:
    id: int
    claim: str
    reference: str
    mutation: str
    label: VerdictLabel
    evidence_refs: list[tuple[str, int]]
    split: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "id": self.id,
                "claim": self.claim,
                "reference": self.reference,
                "mutation": self.mutation,
                "label": self.label.value,
                "evidence": [[page, sent] for page, sent in self.evidence_refs],
                "split": self.split,
            },
            ensure_ascii=False,
        )


@dataclass
class SplitManifest:
    expected: dict[tuple[str, str], int]

    @classmethod
    def full_release(cls) -> "SplitManifest":
        return cls(expected=dict(EXPECTED_FULL_COUNTS))


@dataclass
class ValidationReport:
    cells: dict[tuple[str, str], tuple[int, int]]  # (split, label) -> (observed, expected)
    disjointness_warnings: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(obs == exp for obs, exp in self.cells.values()) and not self.disjointness_warnings

    def failures(self) -> list[str]:
        out = [
            f"cell ({split}, {label}): observed {obs} != expected {exp}"
            for (split, label), (obs, exp) in sorted(self.cells.items())
            if obs != exp
        ]
        return out + list(self.disjointness_warnings)


REQUIRED_FIELDS = ("id", "claim", "reference", "mutation", "label", "evidence", "split")


def parse_record(obj: dict, line_no: int | None = None) -> ClaimRecord:
    where = f" at line {line_no}" if line_no is not None else ""
    for f in REQUIRED_FIELDS:
        if f not in obj:
            raise SchemaError(f"missing required field {f!r}{where}")
    try:
        label = VerdictLabel(obj["label"])
    except ValueError:
        raise SchemaError(f"unknown label {obj['label']!r}{where}") from None
    if obj["split"] not in SPLITS:
        raise SchemaError(f"unknown split {obj['split']!r}{where}")
    evidence = [(str(page), int(sent)) for page, sent in obj["evidence"]]
    rec = ClaimRecord(
        id=int(obj["id"]),
        claim=str(obj["claim"]),
        reference=str(obj["reference"]),
        mutation=str(obj["mutation"]),
        label=label,
        evidence_refs=evidence,
        split=obj["split"],
    )
    if label in (VerdictLabel.SUPPORTS, VerdictLabel.REFUTES):
        if not rec.reference:
            raise SchemaError(f"empty reference for {label.value} record{where}")
        if not rec.evidence_refs:
            raise SchemaError(f"{label.value} record without evidence{where}")
    return rec


def load_dataset(path: str | Path, split: str | None = None) -> list[ClaimRecord]:
    """Load and schema-validate a JSONL dataset file, optionally one split."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"malformed JSON at line {line_no}: {exc}") from None
            rec = parse_record(obj, line_no)
            if split is None or rec.split == split:
                records.append(rec)
    return records


def save_dataset(records, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(rec.to_json() + "\n")


def load_corpus(path: str | Path) -> dict[str, str]:
    """Corpus file: one JSON document per line, fields {page, text}."""
    docs = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if "page" not in obj or "text" not in obj:
                raise SchemaError(f"corpus line {line_no} missing page/text")
            docs[obj["page"]] = obj["text"]
    return docs


def save_corpus(docs: dict[str, str], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for page in sorted(docs):
            fh.write(json.dumps({"page": page, "text": docs[page]}, ensure_ascii=False) + "\n")


def validate_splits(records, manifest: SplitManifest) -> ValidationReport:
    observed: dict[tuple[str, str], int] = {}
    for rec in records:
        key = (rec.split, rec.label.value)
        observed[key] = observed.get(key, 0) + 1
    cells = {key: (observed.get(key, 0), exp) for key, exp in manifest.expected.items()}
    # entity-disjointness spot check on evidence page ids
    pages = {"train": set(), "test": set()}
    for rec in records:
        if rec.split in pages:
            pages[rec.split].update(page for page, _ in rec.evidence_refs)
    warnings = [
        f"page {page!r} appears in both train and test evidence"
        for page in sorted(pages["train"] & pages["test"])
    ]
    return ValidationReport(cells=cells, disjointness_warnings=warnings)


# --------------------------------------------------------------------------
# Toy world


@dataclass
class ToyWorld:
    """A tiny closed world of entities and attribute facts, enough to run the
    whole pipeline end to end on a desk."""

    seed: int = 0
    n_people: int = 12
    n_cities: int = 8
    n_films: int = 10

    def build(self, rng: random.Random):
        people = [f"{first} {last}" for first in _FIRST for last in _LAST][: self.n_people]
        cities = _CITIES[: self.n_cities]
        films = [f"the {a} {b}" for a in _FILM_A for b in _FILM_B][: self.n_films]
        if not (people and cities and films):
            raise ValueError("toy world needs at least one entity of each kind")
        facts = []
        for person in people:
            facts.append(("person_birth", person, rng.choice(cities)))
            facts.append(("person_year", person, rng.randrange(1920, 1996)))
        for i, city in enumerate(cities):
            facts.append(("city_country", city, _COUNTRIES[i % len(_COUNTRIES)]))
        for film in films:
            facts.append(("film_year", film, rng.randrange(1950, 2020)))
            facts.append(("film_director", film, rng.choice(people)))
        return facts


_FIRST = ["alice", "bruno", "carla", "daniel", "elena", "felix", "greta", "hugo", "irene", "jonas", "karin", "leo"]
_LAST = ["moreau", "tanaka", "silva"]
_CITIES = ["lisbon", "osaka", "turin", "bergen", "leipzig", "porto", "lyon", "graz"]
_COUNTRIES = ["portugal", "japan", "italy", "norway", "germany", "france", "austria", "spain"]
_FILM_A = ["silent", "crimson", "last", "golden", "hidden"]
_FILM_B = ["harbor", "meridian"]

# Primary and paraphrase templates per relation. Paraphrases share more than
# half of their tokens with the primary so SUPPORTS pairs keep Jaccard >= 0.5.
_TEMPLATES = {
    "person_birth": ("{s} was born in {o} .", "{s} was born in the city of {o} ."),
    "person_year": ("{s} was born in the year {o} .", "{s} was born during the year {o} ."),
    "city_country": ("{s} is a city in {o} .", "{s} is a large city in {o} ."),
    "film_year": ("{s} was released in {o} .", "{s} was first released in {o} ."),
    "film_director": ("{s} was directed by {o} .", "{s} was a film directed by {o} ."),
}

_ENTITY_POOLS = {
    "person_birth": _CITIES,
    "city_country": _COUNTRIES,
    "film_director": None,  # filled per-world from the people list
}


def _render(relation: str, subj, obj, paraphrase: bool = False) -> str:
    template = _TEMPLATES[relation][1 if paraphrase else 0]
    return template.format(s=subj, o=obj)


def _page_id(subject: str) -> str:
    return subject.replace(" ", "_")


def synth_generate(world: ToyWorld, n_claims: int, seed: int | None = None):
    """Generate (records, corpus) deterministically under the seed.

    Every REFUTES record's reference is a verbatim corpus sentence; train and
    test entities are disjoint by page.
    """
    if n_claims < 1:
        raise ValueError(f"n_claims must be >= 1, got {n_claims}")
    rng = random.Random(world.seed if seed is None else seed)
    facts = world.build(rng)

    people = sorted({s for rel, s, _ in facts if rel.startswith("person")})
    fact_sentences: dict[str, list[tuple[str, str, object]]] = {}
    for rel, subj, obj in facts:
        fact_sentences.setdefault(_page_id(subj), []).append((rel, subj, obj))

    corpus = {}
    sentence_index: dict[str, list[str]] = {}
    for page, page_facts in sorted(fact_sentences.items()):
        sentences = []
        for rel, subj, obj in page_facts:
            sentences.append(_render(rel, subj, obj))
            sentences.append(_render(rel, subj, obj, paraphrase=True))
        corpus[page] = " ".join(sentences)
        sentence_index[page] = sentences

    # split pages (entities) disjointly: ~70/15/15
    pages = sorted(corpus)
    rng.shuffle(pages)
    n = len(pages)
    split_of_page = {}
    for i, page in enumerate(pages):
        split_of_page[page] = "train" if i < 0.7 * n else ("validation" if i < 0.85 * n else "test")

    flat_facts = sorted(facts)
    records = []
    for rec_id in range(n_claims):
        rel, subj, obj = flat_facts[rng.randrange(len(flat_facts))]
        page = _page_id(subj)
        reference = _render(rel, subj, obj)
        sent_id = sentence_index[page].index(reference)
        roll = rng.random()
        if roll < 0.35:  # meaning-preserving paraphrase -> SUPPORTS
            mutation, label = "paraphrase", VerdictLabel.SUPPORTS
            claim = _render(rel, subj, obj, paraphrase=True)
        elif roll < 0.55 and rel in ("person_year", "film_year"):
            mutation, label = "perturb_number", VerdictLabel.REFUTES
            wrong = obj + rng.choice([-7, -3, -1, 1, 3, 7])
            claim = _render(rel, subj, wrong)
        elif roll < 0.75:
            mutation, label = "substitute_entity", VerdictLabel.REFUTES
            pool = _ENTITY_POOLS.get(rel)
            if pool is None and rel == "film_director":
                pool = people
            if pool is None or rel in ("person_year", "film_year"):
                # numeric relations fall back to a number perturbation
                mutation = "perturb_number"
                claim = _render(rel, subj, obj + rng.choice([-5, 2, 4]))
            else:
                choices = [e for e in pool if e != obj]
                claim = _render(rel, subj, rng.choice(choices))
        elif roll < 0.9:
            mutation, label = "negate", VerdictLabel.REFUTES
            claim = reference.replace(" was ", " was not ", 1).replace(" is ", " is not ", 1)
            if claim == reference:
                claim = "it is not true that " + reference
        else:  # claim about the world with no corpus support
            mutation, label = "paraphrase", VerdictLabel.NOT_ENOUGH_INFO
            claim = f"{subj} has a famous museum ."
        records.append(
            ClaimRecord(
                id=rec_id,
                claim=claim,
                reference="" if label is VerdictLabel.NOT_ENOUGH_INFO else reference,
                mutation=mutation,
                label=label,
                evidence_refs=[] if label is VerdictLabel.NOT_ENOUGH_INFO else [(page, sent_id)],
                split=split_of_page[page],
            )
        )
    return records, corpus


def containment_check(records, corpus: dict[str, str]) -> bool:
    """Every REFUTES reference must be entailed by some corpus sentence via
    token containment. Exhaustive loop, used as a generation oracle."""
    for rec in records:
        if rec.label is not VerdictLabel.REFUTES:
            continue
        ref_tokens = set(tokenize(rec.reference).tokens)
        ok = any(
            ref_tokens <= set(tokenize(text).tokens)
            for text in corpus.values()
        )
        if not ok:
            return False
    return True
