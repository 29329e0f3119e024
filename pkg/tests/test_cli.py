import json
import os

import pytest

from kwslim.cli import main
from kwslim.store import load_model
from kwslim.toydata import make_tone_command_tree, make_tone_manifest


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Toy dataset tree + manifest + a short slim-ready training run."""
    root = tmp_path_factory.mktemp("cli")
    data = root / "data"
    data.mkdir()
    keywords = make_tone_command_tree(data, keywords=["low", "mid", "high"],
                                      files_per_keyword=6, seed=0)
    manifest = root / "manifest.json"
    code = main(["prepare", "--data", str(data), "--out", str(manifest),
                 "--keywords", ",".join(keywords)])
    assert code == 0
    model = root / "toy.kwsm"
    code = main(["train", "--data", str(manifest), "--arch", "res8-narrow",
                 "--slim-ready", "--epochs", "2", "--lr", "0.02",
                 "--batch-size", "8", "--out", str(model)])
    assert code == 0
    return {"root": root, "data": data, "manifest": manifest, "model": model}


def _run_json(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, out


class TestPrepare:
    def test_deterministic_output(self, workspace, tmp_path):
        out1, out2 = tmp_path / "m1.json", tmp_path / "m2.json"
        for out in (out1, out2):
            assert main(["prepare", "--data", str(workspace["data"]), "--out", str(out),
                         "--keywords", "low,mid,high"]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_manifest_schema(self, workspace):
        doc = json.loads(workspace["manifest"].read_text())
        assert set(doc) == {"labels", "entries"}
        assert doc["labels"] == ["low", "mid", "high", "unknown", "silence"]
        paths = [e["path"] for e in doc["entries"]]
        assert paths == sorted(paths)
        assert all(set(e) == {"path", "label", "split"} for e in doc["entries"])

    def test_missing_root_is_io_error(self, tmp_path):
        assert main(["prepare", "--data", str(tmp_path / "nope"),
                     "--out", str(tmp_path / "m.json")]) == 2


class TestTrainedModel:
    def test_model_loads_and_has_gammas(self, workspace):
        m = load_model(workspace["model"])
        assert m.spec.arch == "res8-narrow"
        assert m.spec.slim_ready
        assert m.labels == ("low", "mid", "high", "unknown", "silence")

    def test_train_emits_epoch_log(self, workspace, capsys, tmp_path):
        manifest = tmp_path / "small.json"
        make_tone_manifest(tmp_path / "tones", n_classes=3, train_per_class=3,
                           val_per_class=1, seed=1).save(manifest)
        code, out = _run_json(capsys, [
            "train", "--data", str(manifest), "--arch", "res8-narrow",
            "--epochs", "1", "--batch-size", "4", "--lr", "0.01",
            "--out", str(tmp_path / "m.kwsm")])
        assert code == 0
        first = json.loads(out.strip().split("\n")[0])  # epoch logs precede the summary
        assert first["epoch"] == 1
        assert "train_loss" in first and "val_accuracy" in first


class TestPruneFlow:
    def test_prune_then_eval_runs_end_to_end(self, workspace, tmp_path, capsys):
        pruned = tmp_path / "pruned.kwsm"
        code, out = _run_json(capsys, ["prune", "--model", str(workspace["model"]),
                                       "--fraction", "0.4", "--out", str(pruned)])
        assert code == 0
        doc = json.loads(out)
        assert doc["arch"] == "res8-narrow-40"
        assert sum(doc["inner_widths"]) == 3 * 19 - round(0.4 * 3 * 19)

        code, out = _run_json(capsys, ["eval", "--model", str(pruned),
                                       "--data", str(workspace["manifest"]),
                                       "--split", "test"])
        assert code == 0
        assert 0.0 <= json.loads(out)["accuracy"] <= 1.0

    def test_finetune_after_prune(self, workspace, tmp_path, capsys):
        pruned = tmp_path / "p.kwsm"
        assert main(["prune", "--model", str(workspace["model"]),
                     "--fraction", "0.8", "--out", str(pruned)]) == 0
        tuned = tmp_path / "ft.kwsm"
        code = main(["finetune", "--model", str(pruned), "--data", str(workspace["manifest"]),
                     "--epochs", "1", "--lr", "0.01", "--batch-size", "8",
                     "--out", str(tuned)])
        assert code == 0
        assert load_model(tuned).spec.inner_widths == load_model(pruned).spec.inner_widths

    def test_fraction_one_rejected(self, workspace, tmp_path):
        assert main(["prune", "--model", str(workspace["model"]),
                     "--fraction", "1.0", "--out", str(tmp_path / "x.kwsm")]) == 1

    def test_prune_without_gammas_rejected(self, tmp_path, workspace):
        base = tmp_path / "base.kwsm"
        assert main(["train", "--data", str(workspace["manifest"]), "--arch", "res8-narrow",
                     "--epochs", "1", "--lr", "0.02", "--batch-size", "8",
                     "--out", str(base)]) == 0
        assert main(["prune", "--model", str(base), "--fraction", "0.4",
                     "--out", str(tmp_path / "y.kwsm")]) == 1


class TestInfer:
    def test_posteriors_json(self, workspace, capsys):
        wav = next(p for p in sorted((workspace["data"] / "low").iterdir()))
        code, out = _run_json(capsys, ["infer", "--model", str(workspace["model"]),
                                       "--wav", str(wav)])
        assert code == 0
        doc = json.loads(out)
        assert len(doc["posteriors"]) == 5
        assert sum(doc["posteriors"]) == pytest.approx(1.0, abs=1e-6)
        assert doc["label"] == doc["labels"][doc["label_id"]]

    def test_deterministic(self, workspace, capsys):
        wav = next(p for p in sorted((workspace["data"] / "mid").iterdir()))
        argv = ["infer", "--model", str(workspace["model"]), "--wav", str(wav)]
        _, out1 = _run_json(capsys, argv)
        _, out2 = _run_json(capsys, argv)
        assert out1 == out2

    def test_missing_wav_is_io_error(self, workspace):
        assert main(["infer", "--model", str(workspace["model"]),
                     "--wav", "/does/not/exist.wav"]) == 2


class TestBenchCli:
    def test_report_written(self, workspace, tmp_path, capsys):
        out_path = tmp_path / "report.json"
        code, out = _run_json(capsys, ["bench", "--model", str(workspace["model"]),
                                       "--runs", "5", "--warmup", "1",
                                       "--device-label", "testbox", "--out", str(out_path)])
        assert code == 0
        doc = json.loads(out_path.read_text())
        assert doc == json.loads(out)
        assert doc["device_label"] == "testbox"
        assert doc["runs"] == 5

    def test_stage_csv(self, workspace, tmp_path):
        csv_path = tmp_path / "stages.csv"
        assert main(["bench", "--model", str(workspace["model"]), "--runs", "4",
                     "--warmup", "1", "--csv", str(csv_path)]) == 0
        lines = csv_path.read_text().strip().split("\n")
        assert lines[0] == "stage,mean,std,min,p50,p95,p99,max"
        assert [l.split(",")[0] for l in lines[1:]] == ["featurize", "forward", "end_to_end"]

    def test_tradeoff_csv(self, workspace, tmp_path, capsys):
        pruned = tmp_path / "p80.kwsm"
        assert main(["prune", "--model", str(workspace["model"]),
                     "--fraction", "0.8", "--out", str(pruned)]) == 0
        csv_path = tmp_path / "tradeoff.csv"
        code, out = _run_json(capsys, [
            "tradeoff", "--model", str(workspace["model"]), "--model", str(pruned),
            "--data", str(workspace["manifest"]), "--runs", "3", "--warmup", "1",
            "--out", str(csv_path)])
        assert code == 0
        lines = csv_path.read_text().strip().split("\n")
        assert lines[0] == "name,params,multiplies,accuracy,p50_ms"
        assert len(lines) == 3
        assert lines[1].startswith("p80,")  # fewer multiplies sorts first

    def test_tradeoff_json_flag(self, workspace, tmp_path, capsys):
        pruned = tmp_path / "p40.kwsm"
        assert main(["prune", "--model", str(workspace["model"]),
                     "--fraction", "0.4", "--out", str(pruned)]) == 0
        capsys.readouterr()  # drop the prune summary
        code, out = _run_json(capsys, [
            "tradeoff", "--model", str(workspace["model"]), "--model", str(pruned),
            "--data", str(workspace["manifest"]), "--runs", "2", "--warmup", "0", "--json"])
        assert code == 0
        rows = json.loads(out)
        assert [set(r) for r in rows] == [{"name", "params", "multiplies", "accuracy", "p50_ms"}] * 2


class TestExport:
    def test_asset_layout(self, workspace, tmp_path):
        out = tmp_path / "assets"
        assert main(["export", "--model", str(workspace["model"]),
                     "--out", str(out), "--name", "demo"]) == 0
        assert (out / "models" / "demo.kwsm").exists()
        labels = json.loads((out / "labels.json").read_text())
        assert labels == ["low", "mid", "high", "unknown", "silence"]


class TestErrorPaths:
    def test_unknown_flag_exits_1(self, workspace, capsys):
        assert main(["bench", "--model", str(workspace["model"]), "--frobnicate"]) == 1

    def test_unknown_command_exits_1(self, capsys):
        assert main(["explode"]) == 1

    def test_corrupt_model_is_io_error(self, tmp_path):
        bad = tmp_path / "bad.kwsm"
        bad.write_bytes(b"XXXX" + b"\x00" * 32)
        assert main(["bench", "--model", str(bad), "--runs", "2"]) == 2

    def test_no_partial_output_on_failure(self, workspace, tmp_path, monkeypatch):
        # I/O failure into a missing directory maps to exit 2
        target = tmp_path / "missing" / "out.kwsm"
        code = main(["prune", "--model", str(workspace["model"]),
                     "--fraction", "0.4", "--out", str(target)])
        assert code == 2
        assert not target.exists()

        # a crash between temp write and rename leaves no debris behind
        def boom(src, dst):
            raise OSError("simulated rename failure")

        monkeypatch.setattr(os, "replace", boom)
        target2 = tmp_path / "out.kwsm"
        code = main(["prune", "--model", str(workspace["model"]),
                     "--fraction", "0.4", "--out", str(target2)])
        assert code == 2
        assert list(tmp_path.iterdir()) == []
