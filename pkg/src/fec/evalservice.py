"""Blind human-evaluation backend.

Batches system outputs into rater tasks (with a configurable share assigned
to two raters), enforces the three-question cascade at write time, persists
ratings to an append-only journal, and reports aggregate scores and Cohen's
kappa agreement over the double-rated subset.
"""

from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

Q3_OPTIONS = ("improved", "unrelated_added", "no_correction_needed")


class CascadeError(ValueError):
    pass


class ConflictError(RuntimeError):
    pass


@dataclass
class EvalTask:
    task_id: int
    claim: str
    evidence_texts: list[str]
    correction: str
    system_id: str  # hidden from raters, never serialized in task views
    raters: list[str] = field(default_factory=list)

    def view(self) -> dict:
        """Rater-facing payload; deliberately excludes system identity."""
        return {
            "task_id": self.task_id,
            "claim": self.claim,
            "evidence_texts": list(self.evidence_texts),
            "correction": self.correction,
        }


@dataclass
class Rating:
    task_id: int
    rater_id: str
    q1_intelligible: bool
    q2_supported: bool
    q3_corrected: str

    def validate(self) -> None:
        if self.q3_corrected not in Q3_OPTIONS:
            raise CascadeError(f"unknown q3 option {self.q3_corrected!r}")
        if not self.q1_intelligible and self.q2_supported:
            raise CascadeError("cascade violation: q1=no forces q2=no")
        if not self.q1_intelligible and self.q3_corrected == "improved":
            raise CascadeError("cascade violation: q1=no forbids q3=improved")
        if not self.q2_supported and self.q3_corrected == "improved":
            raise CascadeError("cascade violation: q2=no forbids q3=improved")

    def to_json(self) -> str:
        return json.dumps(
            {
                "task_id": self.task_id,
                "rater_id": self.rater_id,
                "q1": self.q1_intelligible,
                "q2": self.q2_supported,
                "q3": self.q3_corrected,
            }
        )

    @classmethod
    def from_json(cls, line: str) -> "Rating":
        obj = json.loads(line)
        return cls(
            task_id=int(obj["task_id"]),
            rater_id=str(obj["rater_id"]),
            q1_intelligible=bool(obj["q1"]),
            q2_supported=bool(obj["q2"]),
            q3_corrected=str(obj["q3"]),
        )


def apply_cascade(q1: bool, q2: bool | None, q3: str | None) -> "Rating":
    """Server-side auto-fill: a negative answer forces negatives downstream."""
    if not q1:
        return Rating(0, "", False, False, "unrelated_added")
    if q2 is None:
        raise CascadeError("q2 required when q1=yes")
    if not q2:
        return Rating(0, "", True, False, q3 if q3 in ("unrelated_added", "no_correction_needed") else "unrelated_added")
    if q3 is None:
        raise CascadeError("q3 required when q2=yes")
    return Rating(0, "", True, True, q3)


def create_batch(
    system_outputs: dict[str, list[dict]],
    raters: list[str],
    sample_per_system: int = 200,
    double_ratio: float = 0.2,
    seed: int = 0,
) -> list[EvalTask]:
    """Build a blind task batch.

    ``system_outputs`` maps system id to dicts with claim/evidence_texts/
    correction. Tasks are shuffled across systems; exactly
    round(double_ratio * n_tasks) tasks get two distinct raters.
    """
    if not system_outputs:
        raise ValueError("need at least one system")
    if double_ratio > 0 and len(raters) < 2:
        raise ValueError("double_ratio > 0 requires a rater pool of >= 2")
    if not raters:
        raise ValueError("need at least one rater")
    rng = random.Random(seed)
    tasks = []
    for system_id in sorted(system_outputs):
        for out in system_outputs[system_id][:sample_per_system]:
            tasks.append(
                EvalTask(
                    task_id=0,
                    claim=out["claim"],
                    evidence_texts=list(out.get("evidence_texts", [])),
                    correction=out["correction"],
                    system_id=system_id,
                )
            )
    rng.shuffle(tasks)
    for i, task in enumerate(tasks):
        task.task_id = i
    n_double = round(double_ratio * len(tasks))
    double_ids = set(rng.sample(range(len(tasks)), n_double))
    for task in tasks:
        if task.task_id in double_ids:
            task.raters = rng.sample(raters, 2)
        else:
            task.raters = [raters[task.task_id % len(raters)]]
    return tasks


class EvalService:
    """In-process service state: one batch, a journal of ratings."""

    def __init__(self, tasks: list[EvalTask], store_dir: str | Path | None = None):
        self.tasks = {t.task_id: t for t in tasks}
        self.ratings: dict[tuple[int, str], Rating] = {}
        self.store_dir = Path(store_dir) if store_dir else None
        if self.store_dir:
            self.store_dir.mkdir(parents=True, exist_ok=True)
            self._save_batch()
            self._replay_journal()

    # -- persistence

    def _batch_path(self) -> Path:
        return self.store_dir / "batch.jsonl"

    def _journal_path(self) -> Path:
        return self.store_dir / "ratings.jsonl"

    def _save_batch(self) -> None:
        path = self._batch_path()
        if path.exists():
            return
        with open(path, "w", encoding="utf-8") as fh:
            for t in sorted(self.tasks.values(), key=lambda t: t.task_id):
                fh.write(
                    json.dumps(
                        {
                            "task_id": t.task_id,
                            "claim": t.claim,
                            "evidence_texts": t.evidence_texts,
                            "correction": t.correction,
                            "system_id": t.system_id,
                            "raters": t.raters,
                        }
                    )
                    + "\n"
                )

    def _replay_journal(self) -> None:
        path = self._journal_path()
        if not path.exists():
            return
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    r = Rating.from_json(line)
                    self.ratings[(r.task_id, r.rater_id)] = r

    @classmethod
    def load(cls, store_dir: str | Path) -> "EvalService":
        store_dir = Path(store_dir)
        tasks = []
        with open(store_dir / "batch.jsonl", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    obj = json.loads(line)
                    tasks.append(
                        EvalTask(
                            task_id=obj["task_id"],
                            claim=obj["claim"],
                            evidence_texts=obj["evidence_texts"],
                            correction=obj["correction"],
                            system_id=obj["system_id"],
                            raters=obj["raters"],
                        )
                    )
        return cls(tasks, store_dir=store_dir)

    # -- rater-facing operations

    def next_task(self, rater_id: str) -> dict | None:
        known = any(rater_id in t.raters for t in self.tasks.values())
        if not known:
            raise KeyError(f"unknown rater {rater_id!r}")
        for task in sorted(self.tasks.values(), key=lambda t: t.task_id):
            if rater_id in task.raters and (task.task_id, rater_id) not in self.ratings:
                return task.view()
        return None

    def submit_rating(self, rating: Rating) -> Rating:
        task = self.tasks.get(rating.task_id)
        if task is None:
            raise KeyError(f"unknown task {rating.task_id}")
        if rating.rater_id not in task.raters:
            raise KeyError(f"task {rating.task_id} not assigned to rater {rating.rater_id!r}")
        if (rating.task_id, rating.rater_id) in self.ratings:
            raise ConflictError(f"duplicate rating for task {rating.task_id} by {rating.rater_id!r}")
        rating.validate()
        self.ratings[(rating.task_id, rating.rater_id)] = rating
        if self.store_dir:
            with open(self._journal_path(), "a", encoding="utf-8") as fh:
                fh.write(rating.to_json() + "\n")
        return rating

    def progress(self, rater_id: str | None = None) -> dict:
        if rater_id is None:
            total = sum(len(t.raters) for t in self.tasks.values())
            done = len(self.ratings)
        else:
            assigned = [t for t in self.tasks.values() if rater_id in t.raters]
            total = len(assigned)
            done = sum(1 for t in assigned if (t.task_id, rater_id) in self.ratings)
        return {"done": done, "total": total, "remaining": total - done}

    # -- reports

    def aggregate(self) -> dict[str, dict[str, float]]:
        """Per-system percentages; a double-rated task contributes the mean of
        its two ratings per question."""
        per_system: dict[str, list[tuple[float, float, float]]] = {}
        for task in self.tasks.values():
            rs = [self.ratings.get((task.task_id, r)) for r in task.raters]
            rs = [r for r in rs if r is not None]
            if not rs:
                continue
            q1 = sum(1.0 if r.q1_intelligible else 0.0 for r in rs) / len(rs)
            q2 = sum(1.0 if r.q2_supported else 0.0 for r in rs) / len(rs)
            q3 = sum(1.0 if r.q3_corrected == "improved" else 0.0 for r in rs) / len(rs)
            per_system.setdefault(task.system_id, []).append((q1, q2, q3))
        report = {}
        for system, rows in sorted(per_system.items()):
            n = len(rows)
            report[system] = {
                "intelligible": 100.0 * sum(r[0] for r in rows) / n,
                "supported": 100.0 * sum(r[1] for r in rows) / n,
                "corrected": 100.0 * sum(r[2] for r in rows) / n,
                "n": n,
            }
        return report

    def double_rated_pairs(self) -> list[tuple[Rating, Rating]]:
        pairs = []
        for task in sorted(self.tasks.values(), key=lambda t: t.task_id):
            if len(task.raters) == 2:
                a = self.ratings.get((task.task_id, task.raters[0]))
                b = self.ratings.get((task.task_id, task.raters[1]))
                if a and b:
                    pairs.append((a, b))
        return pairs

    def agreement(self) -> dict[str, dict[str, float | int]]:
        pairs = self.double_rated_pairs()
        report = {}
        for question in ("q1", "q2", "q3"):
            labels = [(_answer(a, question), _answer(b, question)) for a, b in pairs]
            report[question] = {"kappa": cohen_kappa_pairs(labels), "overlap": len(labels)}
        return report


def _answer(rating: Rating, question: str) -> str:
    if question == "q1":
        return "yes" if rating.q1_intelligible else "no"
    if question == "q2":
        return "yes" if rating.q2_supported else "no"
    return rating.q3_corrected


def cohen_kappa_pairs(pairs: list[tuple[str, str]]) -> float:
    """Cohen's kappa over paired labels: (p_o - p_e) / (1 - p_e), with the
    degenerate p_e == 1 case (both raters constant and equal) defined as 1."""
    if not pairs:
        raise ValueError("kappa needs at least one double-rated task")
    n = len(pairs)
    p_o = sum(1 for a, b in pairs if a == b) / n
    marg_a = Counter(a for a, _ in pairs)
    marg_b = Counter(b for _, b in pairs)
    categories = set(marg_a) | set(marg_b)
    p_e = sum((marg_a[c] / n) * (marg_b[c] / n) for c in categories)
    if abs(1 - p_e) < 1e-12:
        import warnings

        warnings.warn("both raters constant and equal; kappa defined as 1")
        return 1.0
    return (p_o - p_e) / (1 - p_e)


def cohen_kappa(ratings_or_service, question: str) -> float:
    """Kappa for one question over the double-rated subset of a service."""
    if isinstance(ratings_or_service, EvalService):
        pairs = ratings_or_service.double_rated_pairs()
    else:
        pairs = list(ratings_or_service)
    labelled = [(_answer(a, question), _answer(b, question)) for a, b in pairs]
    return cohen_kappa_pairs(labelled)


# --------------------------------------------------------------------------
# HTTP API


def build_app(service: EvalService):
    """FastAPI wrapper exposing the rater-facing HTTP API."""
    from fastapi import FastAPI, HTTPException
    from fastapi.middleware.cors import CORSMiddleware

    app = FastAPI(title="fec-eval")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.get("/api/tasks/next")
    def next_task(rater: str):
        try:
            view = service.next_task(rater)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        if view is None:
            return {"task": None}
        return {"task": view}

    @app.post("/api/ratings")
    def submit(payload: dict):
        try:
            filled = apply_cascade(
                bool(payload["q1"]),
                None if payload.get("q2") is None else bool(payload["q2"]),
                payload.get("q3"),
            )
            rating = Rating(
                task_id=int(payload["task_id"]),
                rater_id=str(payload["rater_id"]),
                q1_intelligible=filled.q1_intelligible,
                q2_supported=filled.q2_supported,
                q3_corrected=filled.q3_corrected,
            )
            # a fully specified payload must also be cascade-consistent
            if payload.get("q2") is not None and bool(payload["q2"]) != rating.q2_supported:
                raise CascadeError("cascade violation: q1=no forces q2=no")
            if payload.get("q3") == "improved" and rating.q3_corrected != "improved":
                raise CascadeError("cascade violation: negative answers force q3 != improved")
        except CascadeError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except (KeyError, TypeError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=f"malformed rating: {exc}")
        try:
            stored = service.submit_rating(rating)
        except CascadeError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except ConflictError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return {"stored": json.loads(stored.to_json())}

    @app.get("/api/reports/aggregate")
    def aggregate():
        return service.aggregate()

    @app.get("/api/reports/agreement")
    def agreement():
        return service.agreement()

    @app.get("/api/progress")
    def progress(rater: str | None = None):
        return service.progress(rater)

    return app
