"""End-to-end experiment driver: index, retrieve, mask, correct, score.

Every stage writes plain files into the experiment directory together with a
manifest (config hash, seeds, format versions) so a re-run with the same
config is byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import corrector as corr
from . import maskers as mk
from .core import VerdictLabel, tokenize
from .dataset import load_corpus, load_dataset
from .lm import train_lm
from .metrics import bleu_k, rouge_n, sari
from .retrieval import build_index, chunk, retrieve

FORMAT_VERSION = 1


@dataclass
class ExperimentConfig:
    dataset: str = ""
    corpus: str = ""
    outdir: str = "experiment"
    split: str = "test"
    window: int = 50
    k: int = 2
    page_fanout: int = 5
    train_masker: str = "random"
    test_masker: str = "heuristic"
    mask_ratio: float = 0.5
    lime_samples: int = 250
    lime_features: int = 6
    corrector: str = "evidence_fill"
    beam: int = 8
    max_span: int = 6
    lm_weight: float = 0.5
    lm_order: int = 3
    lm_alpha: float = 0.1
    seed: int = 0
    endpoint: str = ""  # host:port, external corrector only

    def canonical(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical().encode("utf-8")).hexdigest()

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        """Flat `key = value` text format; '#' starts a comment line."""
        cfg = cls()
        casts = {f: type(getattr(cfg, f)) for f in asdict(cfg)}
        for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"config line {line_no} is not `key = value`: {raw!r}")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in casts:
                raise ValueError(f"unknown config key {key!r} at line {line_no}")
            setattr(cfg, key, casts[key](value))
        if "FEC_SEED" in os.environ:
            cfg.seed = int(os.environ["FEC_SEED"])
        return cfg

    def dump(self) -> str:
        return "\n".join(f"{k} = {v}" for k, v in sorted(asdict(self).items())) + "\n"

    def validate_files(self) -> None:
        for name in ("dataset", "corpus"):
            path = getattr(self, name)
            if not path or not Path(path).exists():
                raise FileNotFoundError(f"config.{name} does not exist: {path!r}")


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage


def _make_masker(name: str, cfg: ExperimentConfig, lm):
    if name == "random":
        return lambda claim, ev: mk.mask_random(claim, cfg.mask_ratio, seed=cfg.seed)
    if name == "heuristic":
        return lambda claim, ev: mk.mask_heuristic(claim, ev)
    if name == "surprisal":
        return lambda claim, ev: mk.mask_surprisal(claim, lm, cfg.mask_ratio)
    if name == "perturbation":
        mcfg = mk.MaskerConfig(
            strategy="perturbation",
            mask_ratio=cfg.mask_ratio,
            lime_samples=cfg.lime_samples,
            lime_features=cfg.lime_features,
            seed=cfg.seed,
        )
        return lambda claim, ev: mk.mask_perturbation(claim, ev, mk.lexical_verdict, mcfg)
    raise ValueError(f"unknown masker {name!r}")


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=1, ensure_ascii=False) + "\n", encoding="utf-8")


def run_experiment(cfg: ExperimentConfig) -> Path:
    """Run the full pipeline; returns the experiment directory."""
    cfg.validate_files()
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    stage = "setup"
    try:
        stage = "load"
        records = load_dataset(cfg.dataset)
        corpus = load_corpus(cfg.corpus)
        eval_records = [
            r
            for r in records
            if r.label is not VerdictLabel.NOT_ENOUGH_INFO and (cfg.split == "all" or r.split == cfg.split)
        ]

        stage = "index"
        passages = [p for page, text in sorted(corpus.items()) for p in chunk(page, text, cfg.window)]
        index = build_index(passages)

        stage = "lm"
        lm = train_lm(
            [tokenize(text).tokens for _, text in sorted(corpus.items())],
            order=cfg.lm_order,
            alpha=cfg.lm_alpha,
        )

        stage = "retrieve"
        evidence = {
            r.id: retrieve(index, tokenize(r.claim), k=cfg.k, page_fanout=cfg.page_fanout) for r in eval_records
        }

        stage = "gen-train"
        train_masker = _make_masker(cfg.train_masker, cfg, lm)
        train_records = [
            r for r in records if r.split == "train" and r.label is VerdictLabel.SUPPORTS
        ]
        with open(outdir / "training_pairs.jsonl", "w", encoding="utf-8") as fh:
            pairs = corr.gen_training_pairs(
                train_records,
                train_masker,
                lambda claim: retrieve(index, tokenize(claim), k=cfg.k, page_fanout=cfg.page_fanout),
            )
            for pair in pairs:
                fh.write(pair.to_json() + "\n")

        stage = "mask"
        test_masker = _make_masker(cfg.test_masker, cfg, lm)
        masked = {}
        with open(outdir / "masked.jsonl", "w", encoding="utf-8") as fh:
            for r in eval_records:
                mc = test_masker(r.claim, evidence[r.id])
                masked[r.id] = mc
                fh.write(
                    json.dumps({"id": r.id, "masked_claim": mc.rendered(), "mask": [int(m) for m in mc.mask]})
                    + "\n"
                )

        stage = "correct"
        corrections = {}
        if cfg.corrector == "external":
            host, _, port = cfg.endpoint.partition(":")
            client = corr.ExternalCorrectorClient(host, int(port))
            batch = [(r.id, masked[r.id].rendered(), evidence[r.id].texts()) for r in eval_records]
            for item in client.correct_batch(batch):
                if isinstance(item, corr.ItemError):
                    raise RuntimeError(f"external corrector item {item.id}: {item.reason}")
                corrections[item.id] = item
        else:
            for r in eval_records:
                mc = masked[r.id]
                if cfg.corrector == "evidence_fill":
                    res = corr.correct_evidence_fill(
                        mc, evidence[r.id], lm,
                        beam=cfg.beam, max_span=cfg.max_span, lm_weight=cfg.lm_weight, result_id=r.id,
                    )
                elif cfg.corrector == "lm_fill":
                    res = corr.correct_lm_fill(mc, lm, result_id=r.id)
                elif cfg.corrector == "copy":
                    res = corr.CorrectionResult(id=r.id, correction=r.claim, provenance="copy")
                else:
                    raise ValueError(f"unknown corrector {cfg.corrector!r}")
                corrections[r.id] = res
        with open(outdir / "corrections.jsonl", "w", encoding="utf-8") as fh:
            for r in eval_records:
                c = corrections[r.id]
                fh.write(json.dumps({"id": r.id, "correction": c.correction, "provenance": c.provenance}) + "\n")

        stage = "score"
        per_instance = []
        for r in eval_records:
            src = tokenize(r.claim).tokens
            out = tokenize(corrections[r.id].correction).tokens
            ref = tokenize(r.reference).tokens
            s = sari(src, out, ref)
            per_instance.append(
                {
                    "id": r.id,
                    "sari_keep": s.keep_f1,
                    "sari_add": s.add_f1,
                    "sari_del": s.del_precision,
                    "sari_final": s.final,
                    "rouge1": rouge_n(out, ref, 1),
                    "rouge2": rouge_n(out, ref, 2),
                    "bleu1": bleu_k(out, ref, 1),
                    "bleu2": bleu_k(out, ref, 2),
                }
            )
        fields = [k for k in per_instance[0] if k != "id"] if per_instance else []
        means = {k: sum(row[k] for row in per_instance) / len(per_instance) for k in fields}
        _write_json(outdir / "scores.json", {"per_instance": per_instance, "means": means})

        stage = "diagnostics"
        diag = mk.mask_diagnostics(list(masked.values()))
        _write_json(
            outdir / "diagnostics.json",
            {
                "n_instances": diag.n_instances,
                "mean_mask_fraction": diag.mean_mask_fraction,
                "share_run_gt5": diag.share_run_gt5,
                "share_run_eq4": diag.share_run_eq4,
            },
        )

        stage = "manifest"
        dataset_hash = hashlib.sha256(Path(cfg.dataset).read_bytes()).hexdigest()
        _write_json(
            outdir / "manifest.json",
            {
                "format_version": FORMAT_VERSION,
                "config": json.loads(cfg.canonical()),
                "config_hash": cfg.config_hash(),
                "dataset_hash": dataset_hash,
                "seed": cfg.seed,
                "n_instances": len(eval_records),
            },
        )
    except Exception as exc:
        if isinstance(exc, StageError):
            raise
        raise StageError(stage, exc) from exc
    return outdir


def report(experiment_dirs) -> dict:
    """Comparison table over experiment directories: one row per experiment,
    columns SARI Keep/Delete/Add/Final. Refuses to mix dataset versions."""
    dirs = [Path(d) for d in experiment_dirs]
    if not dirs:
        raise ValueError("report needs at least one experiment directory")
    rows = []
    dataset_hashes = set()
    for d in dirs:
        manifest = json.loads((d / "manifest.json").read_text(encoding="utf-8"))
        scores = json.loads((d / "scores.json").read_text(encoding="utf-8"))
        dataset_hashes.add(manifest["dataset_hash"])
        cfg = manifest["config"]
        rows.append(
            {
                "experiment": d.name,
                "train_masker": cfg["train_masker"],
                "test_masker": cfg["test_masker"],
                "corrector": cfg["corrector"],
                "keep": scores["means"].get("sari_keep"),
                "delete": scores["means"].get("sari_del"),
                "add": scores["means"].get("sari_add"),
                "final": scores["means"].get("sari_final"),
            }
        )
    if len(dataset_hashes) > 1:
        raise ValueError("refusing to compare experiments run on different dataset versions")
    return {"rows": rows}


def render_report(table: dict) -> str:
    header = f"{'experiment':<24} {'train':<12} {'test':<12} {'corrector':<14} {'Keep':>6} {'Del':>6} {'Add':>6} {'Final':>6}"
    lines = [header, "-" * len(header)]
    for row in table["rows"]:
        lines.append(
            f"{row['experiment']:<24} {row['train_masker']:<12} {row['test_masker']:<12} "
            f"{row['corrector']:<14} {row['keep']:>6.3f} {row['delete']:>6.3f} {row['add']:>6.3f} {row['final']:>6.3f}"
        )
    return "\n".join(lines)
