"""CLI surface: corpus generation, staged training, eval, normalize,
experiment, and flag-over-config precedence."""

import json
from pathlib import Path

import pytest

from hatenorm.cli import main
from hatenorm.corpus import load_corpus


@pytest.fixture(scope="module")
def work_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("cli")


@pytest.fixture(scope="module")
def cli_config(work_dir):
    config = {
        "n": 240,
        "seed": 5,
        "engine": "dict",
        "hip": {"epochs": 2},
        "hsi": {"epochs": 1},
        "hir": {"epochs": 1},
    }
    path = work_dir / "config.json"
    path.write_text(json.dumps(config))
    return path


@pytest.fixture(scope="module")
def corpus_path(work_dir, cli_config):
    path = work_dir / "corpus.jsonl"
    assert main(["gen-corpus", "--config", str(cli_config), "--out", str(path)]) == 0
    return path


@pytest.fixture(scope="module")
def model_dir(work_dir, cli_config, corpus_path):
    directory = work_dir / "models"
    assert main([
        "train", "all",
        "--config", str(cli_config),
        "--corpus", str(corpus_path),
        "--model-dir", str(directory),
    ]) == 0
    return directory


class TestGenCorpus:
    def test_writes_requested_samples(self, corpus_path):
        corpus = load_corpus(corpus_path)
        assert len(corpus) == 240

    def test_flag_overrides_config(self, work_dir, cli_config):
        out = work_dir / "tiny.jsonl"
        main(["gen-corpus", "--config", str(cli_config), "--out", str(out),
              "--n", "7"])
        assert len(load_corpus(out)) == 7


class TestTrain:
    def test_bundle_files_written(self, model_dir):
        for name in ("hip.json", "hsi.json", "hir.json", "detector.json",
                     "engagement.json", "manifest.json"):
            assert (model_dir / name).exists(), name

    def test_manifest_records_engine(self, model_dir):
        manifest = json.loads((model_dir / "manifest.json").read_text())
        assert manifest["pipeline"]["engine"] == "dict"
        assert "bundle_version" in manifest


class TestNormalize:
    def test_text_flag_prints_outcome(self, model_dir, capsys):
        main(["normalize", "--model-dir", str(model_dir),
              "--text", "these vermin should be wiped out today honestly"])
        out = json.loads(capsys.readouterr().out.strip())
        assert set(out) >= {"intensity", "band", "spans", "suggestion", "flag"}

    def test_file_input(self, model_dir, work_dir, capsys):
        batch = work_dir / "batch.txt"
        batch.write_text("a perfectly nice note\n\nthose scum again\n")
        main(["normalize", "--model-dir", str(model_dir), "--file", str(batch)])
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 2
        for line in lines:
            json.loads(line)

    def test_requires_exactly_one_input(self, model_dir):
        with pytest.raises(SystemExit):
            main(["normalize", "--model-dir", str(model_dir)])


class TestEval:
    def test_report_shape(self, model_dir, corpus_path, work_dir, cli_config, capsys):
        out = work_dir / "report.json"
        main(["eval", "--config", str(cli_config), "--corpus", str(corpus_path),
              "--model-dir", str(model_dir), "--out", str(out)])
        report = json.loads(out.read_text())
        assert set(report) == {"bleu", "perplexity", "delta_c", "m_count",
                               "hip", "hsi"}
        assert set(report["hip"]) == {"rmse", "pearson", "cosine"}
        assert set(report["hsi"]) == {"p", "r", "f1", "exact_span_rate"}


class TestExperiment:
    def test_virality_report(self, corpus_path, work_dir, cli_config, capsys):
        out = work_dir / "virality.json"
        main(["experiment", "virality", "--config", str(cli_config),
              "--corpus", str(corpus_path), "--k", "40", "--iterations", "4",
              "--out", str(out)])
        report = json.loads(out.read_text())
        assert len(report["iterations"]) == 4
        assert {"t", "dof", "p", "effect_size"} <= set(report)


class TestMissingOptions:
    def test_missing_required_option_exits(self):
        with pytest.raises(SystemExit):
            main(["gen-corpus"])
