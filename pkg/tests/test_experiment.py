import json
import socket
import threading
import time

import pytest

from fec.corrector import serve_echo
from fec.dataset import ToyWorld, save_corpus, save_dataset, synth_generate
from fec.experiment import (
    ExperimentConfig,
    StageError,
    render_report,
    report,
    run_experiment,
)


@pytest.fixture(scope="module")
def toy_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("toy")
    records, corpus = synth_generate(ToyWorld(seed=7), 120, seed=7)
    dataset = root / "dataset.jsonl"
    corpus_path = root / "corpus.jsonl"
    save_dataset(records, dataset)
    save_corpus(corpus, corpus_path)
    return str(dataset), str(corpus_path)


def base_config(toy_files, outdir, **overrides):
    dataset, corpus = toy_files
    cfg = ExperimentConfig(dataset=dataset, corpus=corpus, outdir=str(outdir))
    for key, value in overrides.items():
        setattr(cfg, key, value)
    return cfg


class TestConfig:
    def test_dump_then_from_file_roundtrip(self, tmp_path):
        cfg = ExperimentConfig(dataset="d", corpus="c", mask_ratio=0.3, seed=13)
        path = tmp_path / "exp.cfg"
        path.write_text(cfg.dump())
        assert ExperimentConfig.from_file(path) == cfg

    def test_comments_and_blank_lines_ignored(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("# comment\n\nseed = 42\n")
        assert ExperimentConfig.from_file(path).seed == 42

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("bogus = 1\n")
        with pytest.raises(ValueError, match="bogus"):
            ExperimentConfig.from_file(path)

    def test_malformed_line_rejected(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("seed 42\n")
        with pytest.raises(ValueError, match="line 1"):
            ExperimentConfig.from_file(path)

    def test_env_seed_override(self, tmp_path, monkeypatch):
        path = tmp_path / "exp.cfg"
        path.write_text("seed = 1\n")
        monkeypatch.setenv("FEC_SEED", "99")
        assert ExperimentConfig.from_file(path).seed == 99

    def test_config_hash_sensitive_to_values(self):
        a = ExperimentConfig(seed=0)
        b = ExperimentConfig(seed=1)
        assert a.config_hash() != b.config_hash()
        assert a.config_hash() == ExperimentConfig(seed=0).config_hash()


class TestRun:
    def test_smoke_writes_all_artifacts(self, toy_files, tmp_path):
        cfg = base_config(toy_files, tmp_path / "exp", split="all")
        outdir = run_experiment(cfg)
        for name in (
            "training_pairs.jsonl",
            "masked.jsonl",
            "corrections.jsonl",
            "scores.json",
            "diagnostics.json",
            "manifest.json",
        ):
            assert (outdir / name).exists(), name
        scores = json.loads((outdir / "scores.json").read_text())
        assert scores["per_instance"]
        assert 0.0 <= scores["means"]["sari_final"] <= 1.0

    def test_rerun_is_byte_identical(self, toy_files, tmp_path):
        cfg1 = base_config(toy_files, tmp_path / "a", split="all")
        cfg2 = base_config(toy_files, tmp_path / "b", split="all")
        d1 = run_experiment(cfg1)
        d2 = run_experiment(cfg2)
        for name in ("training_pairs.jsonl", "masked.jsonl", "corrections.jsonl", "scores.json", "diagnostics.json"):
            assert (d1 / name).read_bytes() == (d2 / name).read_bytes(), name

    def test_missing_dataset_raises_filenotfound(self, tmp_path):
        cfg = ExperimentConfig(dataset="/nonexistent", corpus="/nonexistent", outdir=str(tmp_path))
        with pytest.raises(FileNotFoundError):
            run_experiment(cfg)

    def test_unknown_corrector_names_correct_stage(self, toy_files, tmp_path):
        cfg = base_config(toy_files, tmp_path / "exp", corrector="bogus", split="all")
        with pytest.raises(StageError) as err:
            run_experiment(cfg)
        assert err.value.stage == "correct"

    def test_unreachable_endpoint_names_correct_stage(self, toy_files, tmp_path):
        with socket.socket() as s:
            s.bind(("127.0.0.1", 0))
            dead_port = s.getsockname()[1]
        cfg = base_config(
            toy_files, tmp_path / "exp", corrector="external",
            endpoint=f"127.0.0.1:{dead_port}", split="all",
        )
        with pytest.raises(StageError) as err:
            run_experiment(cfg)
        assert err.value.stage == "correct"

    def test_external_corrector_roundtrip(self, toy_files, tmp_path):
        with socket.socket() as s:
            s.bind(("127.0.0.1", 0))
            port = s.getsockname()[1]
        t = threading.Thread(target=serve_echo, args=(port,), daemon=True)
        t.start()
        time.sleep(0.1)
        cfg = base_config(
            toy_files, tmp_path / "exp", corrector="external",
            endpoint=f"127.0.0.1:{port}", split="test",
        )
        outdir = run_experiment(cfg)
        lines = (outdir / "corrections.jsonl").read_text().splitlines()
        assert lines
        assert all(json.loads(l)["provenance"] == "external" for l in lines)
        t.join(timeout=2)

    def test_random_train_heuristic_test_runs_clean(self, toy_files, tmp_path):
        cfg = base_config(
            toy_files, tmp_path / "exp",
            train_masker="random", test_masker="heuristic", split="all",
        )
        outdir = run_experiment(cfg)
        manifest = json.loads((outdir / "manifest.json").read_text())
        assert manifest["config"]["train_masker"] == "random"
        assert manifest["n_instances"] > 0


class TestReport:
    def run_pair(self, toy_files, tmp_path):
        d1 = run_experiment(base_config(toy_files, tmp_path / "fill", split="all"))
        d2 = run_experiment(base_config(toy_files, tmp_path / "copy", corrector="copy", split="all"))
        return d1, d2

    def test_two_row_table(self, toy_files, tmp_path):
        d1, d2 = self.run_pair(toy_files, tmp_path)
        table = report([d1, d2])
        assert len(table["rows"]) == 2
        text = render_report(table)
        assert "Keep" in text and "Final" in text
        assert len(text.splitlines()) == 4

    def test_evidence_fill_beats_copy_baseline(self, toy_files, tmp_path):
        d1, d2 = self.run_pair(toy_files, tmp_path)
        rows = {r["corrector"]: r for r in report([d1, d2])["rows"]}
        assert rows["evidence_fill"]["final"] >= rows["copy"]["final"] + 0.05

    def test_mixed_dataset_hash_refused(self, toy_files, tmp_path):
        d1, _ = self.run_pair(toy_files, tmp_path)
        records, corpus = synth_generate(ToyWorld(seed=8), 60, seed=8)
        other_ds = tmp_path / "other.jsonl"
        other_cp = tmp_path / "other_corpus.jsonl"
        save_dataset(records, other_ds)
        save_corpus(corpus, other_cp)
        d3 = run_experiment(
            ExperimentConfig(dataset=str(other_ds), corpus=str(other_cp), outdir=str(tmp_path / "other_exp"), split="all")
        )
        with pytest.raises(ValueError, match="dataset"):
            report([d1, d3])

    def test_empty_report_rejected(self):
        with pytest.raises(ValueError):
            report([])
