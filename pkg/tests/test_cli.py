# -*- coding: utf-8 -*-

import os
import json

import numpy as np
import pandas as pd
import pytest

from hierloss.cli import run
from hierloss.taxonomy import balancedTaxonomy, dumpTaxonomy

SMALL = ["--branching", "2,2", "--dim", "6", "--per-leaf", "5",
         "--spread", "0.3"]


def runCli(out, *argv):
    return run(list(argv) + ["--out", str(out), "-q"])


def runDirs(out):
    return [os.path.join(str(out), name) for name in sorted(os.listdir(
        str(out)), key=lambda n: os.path.getmtime(os.path.join(str(out), n)))]


def lastRunDir(out):
    return runDirs(out)[-1]


def readJson(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def test_usage_errors_exit_with_2(tmp_path):
    with pytest.raises(SystemExit) as info:
        run([])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        runCli(tmp_path, "train", "--epochs", "many")
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        runCli(tmp_path, "eval", "--preds")
    assert info.value.code == 2


def test_gen_synth(tmp_path, capsys):
    assert runCli(tmp_path, "gen-synth", "--branching", "2,2,2",
                  "--per-leaf", "5") == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["num_samples"] == 40
    assert summary["num_leaves"] == 8
    run_dir = summary["run_dir"]
    for name in ("config.json", "taxonomy.json", "features.npz",
                 "class_embeddings.npz"):
        assert os.path.isfile(os.path.join(run_dir, name))
    assert readJson(os.path.join(run_dir, "config.json"))["synth"][
        "branching"] == [2, 2, 2]


def test_gen_synth_csv_then_train_from_files(tmp_path, capsys):
    assert runCli(tmp_path, "gen-synth", "--format", "csv", *SMALL) == 0
    synth = json.loads(capsys.readouterr().out)
    run_dir = synth["run_dir"]
    assert synth["features"].endswith(".csv")
    status = runCli(tmp_path, "train",
                    "--taxonomy", os.path.join(run_dir, "taxonomy.json"),
                    "--features", synth["features"],
                    "--embeddings", synth["embeddings"],
                    "--epochs", "2", "--batch-size", "8")
    assert status == 0
    report = json.loads(capsys.readouterr().out)["report"]
    assert 0.0 <= report["fpa"] <= 1.0


def test_train_outputs_and_reproducibility(tmp_path, capsys):
    argv = ["train"] + SMALL + ["--epochs", "2", "--batch-size", "8",
                                "--lambda1", "1", "--seed", "5"]
    assert runCli(tmp_path, *argv) == 0
    first = json.loads(capsys.readouterr().out)["run_dir"]
    assert runCli(tmp_path, *argv) == 0
    second = json.loads(capsys.readouterr().out)["run_dir"]
    assert first != second
    assert first.endswith("-seed5") or "-seed5-" in first

    for name in ("config.json", "run_record.json", "timing.json",
                 "history.csv", "report.json", "report.txt", "adapter.npz",
                 "predictions.csv", "embeddings.csv"):
        assert os.path.isfile(os.path.join(first, name))
    with open(os.path.join(first, "run_record.json"), "rb") as f:
        record_bytes = f.read()
    with open(os.path.join(second, "run_record.json"), "rb") as f:
        assert f.read() == record_bytes
    assert b"wall_time" not in record_bytes
    assert len(pd.read_csv(os.path.join(first, "history.csv"))) == 2
    config = readJson(os.path.join(first, "config.json"))
    assert config["seed"] == 5
    assert config["loss"]["lambda1"] == 1


def test_set_overrides_reach_the_run(tmp_path, capsys):
    assert runCli(tmp_path, "train", *SMALL + [
        "--set", "train.epochs=1", "--set", "train.decode=path"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["report"]["tice"] == 0.0
    record = readJson(os.path.join(summary["run_dir"], "run_record.json"))
    assert len(record["history"]) == 1
    assert record["config"]["decode"] == "path"


def test_bad_override_fails_with_error_json(tmp_path, capsys):
    assert runCli(tmp_path, "train", "--set", "train.epochs") == 1
    payload = json.loads(capsys.readouterr().err)
    assert payload["status"] == "error"
    assert payload["run_dir"] is None
    assert not os.listdir(str(tmp_path))


def test_eval_perfect_predictions(tmp_path, capsys):
    taxonomy = balancedTaxonomy((2, 3))
    tax_path = str(tmp_path / "taxonomy.json")
    dumpTaxonomy(taxonomy, tax_path)
    paths = taxonomy.leafPaths()
    frame = pd.DataFrame({"sample_id": np.arange(len(paths))})
    for level in range(2):
        frame["pred_{}".format(level + 1)] = paths[:, level]
    for level in range(2):
        frame["true_{}".format(level + 1)] = paths[:, level]
    preds = str(tmp_path / "preds.csv")
    frame.to_csv(preds, index=False)

    assert runCli(tmp_path / "runs", "eval", "--preds", preds,
                  "--taxonomy", tax_path) == 0
    report = json.loads(capsys.readouterr().out)["report"]
    assert report["fpa"] == 1.0
    assert report["tice"] == 0.0
    assert report["accuracy"] == 1.0
    run_dir = lastRunDir(tmp_path / "runs")
    assert readJson(os.path.join(run_dir, "report.json")) == report
    assert readJson(os.path.join(run_dir, "config.json"))["eval"] == \
        {"preds": preds}


def test_missing_file_gives_error_json(tmp_path, capsys):
    taxonomy = str(tmp_path / "taxonomy.json")
    dumpTaxonomy(balancedTaxonomy((2, 2)), taxonomy)
    status = runCli(tmp_path / "runs", "eval", "--preds",
                    str(tmp_path / "missing.csv"), "--taxonomy", taxonomy)
    assert status == 1
    payload = json.loads(capsys.readouterr().err)
    assert payload["status"] == "error"
    assert payload["command"] == "eval"
    run_dir = payload["run_dir"]
    assert readJson(os.path.join(run_dir, "error.json")) == payload
    assert os.path.isfile(os.path.join(run_dir, "config.json"))


def test_sweep_default_grid(tmp_path, capsys):
    assert runCli(tmp_path, "sweep", *SMALL + ["--epochs", "1"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["cells"] == 5
    run_dir = summary["run_dir"]
    table = pd.read_csv(os.path.join(run_dir, "sweep.csv"))
    assert list(table["lambda1"]) == [0.0, 0.5, 1.0, 2.0, 5.0]
    records = readJson(os.path.join(run_dir, "run_records.json"))
    assert [r["config"]["weights"]["lambda1"] for r in records] == \
        [0.0, 0.5, 1.0, 2.0, 5.0]
    config = readJson(os.path.join(run_dir, "config.json"))
    assert config["sweep"] == {"lambda1s": [0.0, 0.5, 1.0, 2.0, 5.0],
                               "lambda2s": [0.0]}
    with open(os.path.join(run_dir, "sweep.txt"), encoding="utf-8") as f:
        text = f.read()
    for row in ("Accuracy", "FPA", "TICE", "wAP"):
        assert row in text


def test_ablate(tmp_path, capsys):
    assert runCli(tmp_path, "ablate", *SMALL + [
        "--epochs", "1", "--arms", "ce,joint"]) == 0
    summary = json.loads(capsys.readouterr().out)
    run_dir = summary["run_dir"]
    assert set(summary["fpa"]) == {"ce", "joint"}
    assert len(readJson(os.path.join(run_dir, "run_records.json"))) == 2
    table = pd.read_csv(os.path.join(run_dir, "ablation.csv"))
    assert list(table["arm"]) == ["ce", "joint"]
    config = readJson(os.path.join(run_dir, "config.json"))
    assert config["ablate"] == {"arms": ["ce", "joint"], "keep_ce": False}


def test_ablate_arms_from_config_file(tmp_path, capsys):
    conf = tmp_path / "conf.json"
    conf.write_text(json.dumps({"ablate": {"arms": ["hisce_only"],
                                           "keep_ce": True}}))
    assert runCli(tmp_path / "runs", "ablate", "--config", str(conf),
                  *SMALL + ["--epochs", "1"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["arms"] == ["hisce_only"]
    config = readJson(os.path.join(summary["run_dir"], "config.json"))
    assert config["ablate"]["keep_ce"] is True


def test_check_grads(tmp_path, capsys):
    assert runCli(tmp_path, "check-grads", "--instances", "5") == 0
    summary = json.loads(capsys.readouterr().out)
    result = readJson(os.path.join(summary["run_dir"], "gradcheck.json"))
    assert result["passed"] is True
    assert result["instances"] == 5
    config = readJson(os.path.join(summary["run_dir"], "config.json"))
    assert config["gradcheck"]["instances"] == 5


def test_dump_embeddings_with_trained_adapter(tmp_path, capsys):
    assert runCli(tmp_path, "train", *SMALL + ["--epochs", "1"]) == 0
    adapter = os.path.join(json.loads(capsys.readouterr().out)["run_dir"],
                           "adapter.npz")
    assert runCli(tmp_path, "dump-embeddings", "--adapter", adapter,
                  *SMALL) == 0
    summary = json.loads(capsys.readouterr().out)
    frame = pd.read_csv(os.path.join(summary["run_dir"], "embeddings.csv"))
    assert (frame["kind"] == "sample").sum() == 20
    assert (frame["kind"] == "class").sum() == 2 + 4
    config = readJson(os.path.join(summary["run_dir"], "config.json"))
    assert config["dump"]["adapter"] == adapter


def test_blank_label_cell_fails_with_error_json(tmp_path, capsys):
    assert runCli(tmp_path, "gen-synth", "--format", "csv", *SMALL) == 0
    synth = json.loads(capsys.readouterr().out)
    with open(synth["features"], encoding="utf-8") as f:
        lines = f.read().splitlines()
    lines[2] = lines[2].rsplit(",", 1)[0] + ","
    with open(synth["features"], "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    status = runCli(tmp_path / "runs", "train",
                    "--taxonomy", os.path.join(synth["run_dir"],
                                               "taxonomy.json"),
                    "--features", synth["features"], "--epochs", "1")
    assert status == 1
    payload = json.loads(capsys.readouterr().err)
    assert payload["command"] == "train"
    assert os.path.isfile(os.path.join(payload["run_dir"], "error.json"))


def test_eval_rejects_stray_prediction_column(tmp_path, capsys):
    taxonomy = str(tmp_path / "taxonomy.json")
    dumpTaxonomy(balancedTaxonomy((2,)), taxonomy)
    preds = tmp_path / "preds.csv"
    preds.write_text("sample_id,pred_1,pred_x,true_1\n0,1,1,1\n")
    assert runCli(tmp_path / "runs", "eval", "--preds", str(preds),
                  "--taxonomy", taxonomy) == 1
    payload = json.loads(capsys.readouterr().err)
    assert payload["status"] == "error"
    assert payload["error"] == "DataFormatError"
    assert "sample_id" in payload["message"]


def test_eval_needs_a_prediction_file(tmp_path, capsys):
    taxonomy = str(tmp_path / "taxonomy.json")
    dumpTaxonomy(balancedTaxonomy((2, 2)), taxonomy)
    assert runCli(tmp_path / "runs", "eval", "--taxonomy", taxonomy) == 1
    payload = json.loads(capsys.readouterr().err)
    assert payload["error"] == "ConfigError"
    assert "--preds" in payload["message"]
