"""`fec` command line: index, retrieve, mask, gen-train, correct, score,
correlate, serve-eval, report, config, run, synth."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import corrector as corr
from . import maskers as mk
from .core import tokenize
from .dataset import (
    SplitManifest,
    ToyWorld,
    load_corpus,
    load_dataset,
    save_corpus,
    save_dataset,
    synth_generate,
    validate_splits,
)
from .experiment import ExperimentConfig, StageError, render_report, report as build_report, run_experiment
from .lm import train_lm
from .metrics import bleu_k, correlation_report, rouge_n, sari
from .retrieval import build_index, chunk, load_index, retrieve, save_index


@click.group()
def main():
    """Factual error correction pipeline and evaluation harness."""


@main.command()
@click.option("--corpus", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--window", default=50, show_default=True)
def index(corpus, out, window):
    """Chunk a corpus into passages and build the retrieval index."""
    docs = load_corpus(corpus)
    passages = [p for page, text in sorted(docs.items()) for p in chunk(page, text, window)]
    idx = build_index(passages)
    save_index(idx, out)
    click.echo(f"indexed {idx.n_passages} passages over {idx.n_pages} pages -> {out}")


@main.command("retrieve")
@click.option("--index", "index_path", required=True, type=click.Path(exists=True))
@click.option("--claim", required=True)
@click.option("-k", default=2, show_default=True)
@click.option("--page-fanout", default=5, show_default=True)
def retrieve_cmd(index_path, claim, k, page_fanout):
    """Print the top-k evidence passages for a claim."""
    idx = load_index(index_path)
    ev = retrieve(idx, tokenize(claim), k=k, page_fanout=page_fanout)
    for passage, score in ev.passages:
        click.echo(f"{score:8.4f}  {passage.passage_id}  {passage.text()}")


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True))
@click.option("--corpus", required=True, type=click.Path(exists=True))
@click.option("--strategy", type=click.Choice(["random", "heuristic", "surprisal", "perturbation"]), default="heuristic")
@click.option("--ratio", default=0.5, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--window", default=50, show_default=True)
@click.option("-k", default=2, show_default=True)
@click.option("--out", required=True, type=click.Path())
def mask(dataset, corpus, strategy, ratio, seed, window, k, out):
    """Mask claims and write `id + rendered masked claim + mask vector`."""
    records = load_dataset(dataset)
    docs = load_corpus(corpus)
    passages = [p for page, text in sorted(docs.items()) for p in chunk(page, text, window)]
    idx = build_index(passages)
    lm = train_lm([tokenize(t).tokens for t in docs.values()])
    with open(out, "w", encoding="utf-8") as fh:
        for rec in records:
            ev = retrieve(idx, tokenize(rec.claim), k=k)
            if strategy == "random":
                mc = mk.mask_random(rec.claim, ratio, seed=seed)
            elif strategy == "heuristic":
                mc = mk.mask_heuristic(rec.claim, ev)
            elif strategy == "surprisal":
                mc = mk.mask_surprisal(rec.claim, lm, ratio)
            else:
                mc = mk.mask_perturbation(rec.claim, ev, mk.lexical_verdict, mk.MaskerConfig(seed=seed))
            fh.write(json.dumps({"id": rec.id, "masked_claim": mc.rendered(), "mask": [int(m) for m in mc.mask]}) + "\n")
    click.echo(f"masked {len(records)} claims -> {out}")


@main.command("gen-train")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def gen_train(config_path):
    """Generate distant-supervision training pairs (gen-train stage only)."""
    cfg = ExperimentConfig.from_file(config_path)
    run_experiment(cfg)
    click.echo(f"training pairs written to {Path(cfg.outdir) / 'training_pairs.jsonl'}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def correct(config_path):
    """Run masking + correction per the config and write corrections."""
    cfg = ExperimentConfig.from_file(config_path)
    outdir = run_experiment(cfg)
    click.echo(f"corrections written to {outdir / 'corrections.jsonl'}")


@main.command()
@click.option("--source", required=True, type=click.Path(exists=True), help="one claim per line")
@click.option("--output", required=True, type=click.Path(exists=True), help="one correction per line")
@click.option("--reference", required=True, type=click.Path(exists=True), help="one reference per line")
def score(source, output, reference):
    """SARI/ROUGE/BLEU per instance and corpus means."""
    srcs = Path(source).read_text(encoding="utf-8").splitlines()
    outs = Path(output).read_text(encoding="utf-8").splitlines()
    refs = Path(reference).read_text(encoding="utf-8").splitlines()
    if not len(srcs) == len(outs) == len(refs):
        raise click.ClickException("source/output/reference line counts differ")
    rows = []
    for s, o, r in zip(srcs, outs, refs):
        st, ot, rt = tokenize(s).tokens, tokenize(o).tokens, tokenize(r).tokens
        sc = sari(st, ot, rt)
        rows.append(
            {
                "sari_keep": sc.keep_f1, "sari_add": sc.add_f1, "sari_del": sc.del_precision,
                "sari_final": sc.final,
                "rouge1": rouge_n(ot, rt, 1), "rouge2": rouge_n(ot, rt, 2),
                "bleu1": bleu_k(ot, rt, 1), "bleu2": bleu_k(ot, rt, 2),
            }
        )
    means = {k: sum(r[k] for r in rows) / len(rows) for k in rows[0]} if rows else {}
    click.echo(json.dumps({"per_instance": rows, "means": means}, indent=1))


@main.command()
@click.option("--metrics", "metrics_path", required=True, type=click.Path(exists=True),
              help="JSON: {system: {metric: mean}}")
@click.option("--human", "human_path", required=True, type=click.Path(exists=True),
              help="JSON: {system: {question: score}}")
def correlate(metrics_path, human_path):
    """Pearson r of each metric against each human question, across systems."""
    metric_means = json.loads(Path(metrics_path).read_text(encoding="utf-8"))
    human_means = json.loads(Path(human_path).read_text(encoding="utf-8"))
    table = correlation_report(metric_means, human_means)
    click.echo(json.dumps(table, indent=1))


@main.command("serve-eval")
@click.option("--batch", "batch_path", required=True, type=click.Path(exists=True),
              help="JSON: {system: [{claim, evidence_texts, correction}]}")
@click.option("--store", required=True, type=click.Path())
@click.option("--port", default=8040, show_default=True)
@click.option("--raters", default="r1,r2", show_default=True, help="comma-separated rater ids")
@click.option("--sample-per-system", default=200, show_default=True)
@click.option("--double-ratio", default=0.2, show_default=True)
@click.option("--seed", default=0, show_default=True)
def serve_eval(batch_path, store, port, raters, sample_per_system, double_ratio, seed):
    """Start the blind human-evaluation HTTP service."""
    import uvicorn

    from .evalservice import EvalService, build_app, create_batch

    store_dir = Path(store)
    if (store_dir / "batch.jsonl").exists():
        service = EvalService.load(store_dir)
    else:
        outputs = json.loads(Path(batch_path).read_text(encoding="utf-8"))
        tasks = create_batch(
            outputs,
            raters=[r.strip() for r in raters.split(",") if r.strip()],
            sample_per_system=sample_per_system,
            double_ratio=double_ratio,
            seed=seed,
        )
        service = EvalService(tasks, store_dir=store_dir)
    uvicorn.run(build_app(service), host="127.0.0.1", port=port)


@main.command("report")
@click.argument("experiment_dirs", nargs=-1, required=True, type=click.Path(exists=True))
def report_cmd(experiment_dirs):
    """Comparison table across experiment directories."""
    click.echo(render_report(build_report(experiment_dirs)))


@main.command()
@click.option("--dump", is_flag=True, help="print the default configuration")
@click.option("--config", "config_path", type=click.Path(exists=True))
def config(dump, config_path):
    """Show default or resolved experiment configuration."""
    cfg = ExperimentConfig.from_file(config_path) if config_path else ExperimentConfig()
    if dump or not config_path:
        click.echo(cfg.dump(), nl=False)
    else:
        click.echo(cfg.dump(), nl=False)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def run(config_path):
    """Run the full experiment pipeline from a config file."""
    cfg = ExperimentConfig.from_file(config_path)
    try:
        outdir = run_experiment(cfg)
    except StageError as exc:
        click.echo(str(exc), err=True)
        sys.exit(1)
    click.echo(f"experiment complete: {outdir}")


@main.command()
@click.option("--n-claims", default=200, show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.option("--dataset-out", required=True, type=click.Path())
@click.option("--corpus-out", required=True, type=click.Path())
def synth(n_claims, seed, dataset_out, corpus_out):
    """Generate the seeded toy-world dataset and corpus."""
    records, corpus_docs = synth_generate(ToyWorld(seed=seed), n_claims, seed=seed)
    save_dataset(records, dataset_out)
    save_corpus(corpus_docs, corpus_out)
    click.echo(f"wrote {len(records)} records and {len(corpus_docs)} documents")


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True))
@click.option("--full-release", is_flag=True, help="check against the released split counts")
def validate(dataset, full_release):
    """Validate a dataset file's schema and split counts."""
    records = load_dataset(dataset)
    if full_release:
        rep = validate_splits(records, SplitManifest.full_release())
        for line in rep.failures():
            click.echo(line)
        click.echo("PASS" if rep.passed else "FAIL")
        if not rep.passed:
            sys.exit(1)
    else:
        click.echo(f"{len(records)} records, schema OK")


if __name__ == "__main__":
    main()
