import json
import os

import numpy as np
import pytest

from poladca.cli import main

PRE_FLAGS = ["--window-len", "200", "--stride", "200", "--k", "4", "--segment-count", "10"]
SMALL_MODEL = ["--d-model", "8", "--n-heads", "2", "--classifier-dims", "8", "--epochs", "3", "--batch-size", "8"]


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    assert main(["gendata", "--out", str(out), "--n-classes", "3", "--samples-per-class", "8",
                 "--window-len", "200"]) == 0
    return out


@pytest.fixture(scope="module")
def trained(dataset, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert main(["train", "--out", str(out), "--manifest", str(dataset / "manifest.json"),
                 "--scheme", "dca", *PRE_FLAGS, *SMALL_MODEL]) == 0
    return out


class TestGendata:
    def test_counts(self, dataset):
        entries = json.loads((dataset / "manifest.json").read_text())
        assert len(entries) == 24
        assert np.bincount([e["label"] for e in entries]).tolist() == [8, 8, 8]

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for d in (a, b):
            assert main(["gendata", "--out", str(d), "--n-classes", "2", "--samples-per-class", "2"]) == 0
        for name in sorted(os.listdir(a)):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_unwritable_out(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        assert main(["gendata", "--out", str(blocker / "sub")]) == 2


class TestTrain:
    def test_missing_manifest(self, tmp_path):
        assert main(["train", "--out", str(tmp_path), "--manifest", str(tmp_path / "nope.json")]) == 2

    def test_outputs(self, trained):
        for name in ("checkpoint.json", "report.json", "confusion.csv", "split.json", "resolved_config.json"):
            assert (trained / name).is_file()
        resolved = json.loads((trained / "resolved_config.json").read_text())
        assert resolved["model.scheme"] == "dca" and resolved["model.d_model"] == 8

    def test_byte_identical_checkpoints(self, dataset, trained, tmp_path):
        assert main(["train", "--out", str(tmp_path), "--manifest", str(dataset / "manifest.json"),
                     "--scheme", "dca", *PRE_FLAGS, *SMALL_MODEL]) == 0
        assert (tmp_path / "checkpoint.json").read_bytes() == (trained / "checkpoint.json").read_bytes()
        assert (tmp_path / "report.json").read_bytes() == (trained / "report.json").read_bytes()

    def test_config_file_and_flag_override(self, dataset, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"model.scheme": "gcn", "model.d_model": 4, "model.epochs": 1}))
        out = tmp_path / "run"
        assert main(["train", "--config", str(cfg), "--out", str(out), "--manifest",
                     str(dataset / "manifest.json"), "--d-model", "6", "--n-heads", "2", *PRE_FLAGS]) == 0
        resolved = json.loads((out / "resolved_config.json").read_text())
        assert resolved["model.scheme"] == "gcn" and resolved["model.d_model"] == 6

    def test_unknown_key(self, dataset, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"model.depth": 3}))
        assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "r"),
                     "--manifest", str(dataset / "manifest.json")]) == 2


class TestDiagnose:
    def test_empty_input(self, trained, tmp_path, capsys):
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        capsys.readouterr()
        assert main(["diagnose", "--checkpoint", str(trained / "checkpoint.json"), "--input", str(empty)]) == 0
        assert capsys.readouterr().out == ""

    def test_preprocess_mismatch(self, trained, dataset):
        assert main(["diagnose", "--checkpoint", str(trained / "checkpoint.json"),
                     "--input", str(dataset / "record_00.csv"), "--k", "3"]) == 2

    def test_missing_checkpoint(self, tmp_path):
        assert main(["diagnose", "--checkpoint", str(tmp_path / "none.json")]) == 2

    def test_replay_matches_trainer(self, trained, dataset, tmp_path):
        entries = json.loads((dataset / "manifest.json").read_text())
        test_idx = json.loads((trained / "split.json").read_text())["test"]
        report = json.loads((trained / "report.json").read_text())
        hits = 0
        for i in test_idx:
            out = tmp_path / f"em{i}.jsonl"
            assert main(["diagnose", "--checkpoint", str(trained / "checkpoint.json"),
                         "--input", str(dataset / entries[i]["csv"]), "--out", str(out)]) == 0
            lines = out.read_text().splitlines()
            assert len(lines) == 1
            em = json.loads(lines[0])
            assert set(em) == {"t", "class", "posterior", "gate_weights"}
            assert em["t"] == 0 and len(em["gate_weights"]) == 3
            assert sum(em["posterior"]) == pytest.approx(1.0, abs=1e-12)
            hits += em["class"] == entries[i]["label"]
        assert hits / len(test_idx) == report["test_acc"]


class TestRobust:
    def test_flops(self, capsys):
        assert main(["robust", "--suite", "flops", "--n", "10", "--d", "64"]) == 0
        out = capsys.readouterr().out.split("\n")
        assert "SCA 12800" in out and "DCA 94720" in out and "PolaDCA 97280" in out

    def test_gamma(self, capsys):
        assert main(["robust", "--suite", "gamma", "--alpha", "0.5,0.5", "--rho", "1.0"]) == 0
        out = capsys.readouterr().out
        assert "gamma 1.22474" in out and "gamma_pol 0.707107" in out

    def test_lemmas_reports_violations(self, tmp_path, capsys):
        code = main(["robust", "--suite", "lemmas", "--trials", "200", "--out", str(tmp_path)])
        result = json.loads((tmp_path / "robust_lemmas.json").read_text())
        assert result["lemmas"]["consensus"]["violations"] == 0
        assert code == (4 if result["violations"] else 0)

    def test_unknown_suite(self):
        assert main(["robust", "--suite", "speed"]) == 2

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert "checkpoint schema" in capsys.readouterr().out
