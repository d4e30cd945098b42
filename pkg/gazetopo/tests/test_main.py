import json

import pytest

from gazetopo import main
from gazetopo.config import reset_settings

SMALL = ["--reduction", "5", "--dim", "3", "--delay", "2"]


@pytest.fixture(autouse=True)
def clean_settings(monkeypatch):
    for name in ("GAZETOPO_SEED", "GAZETOPO_N_JOBS", "GAZETOPO_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    reset_settings()
    yield
    reset_settings()


@pytest.fixture
def synth_dir(tmp_path):
    out = tmp_path / "data"
    assert main.run(["synth", "--out-dir", str(out), "--per-class", "4", "--points", "300"]) == 0
    return out


def test_synth_writes_a_manifest(synth_dir):
    lines = (synth_dir / "manifest.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "path,label"
    assert len(lines) == 17


def test_pipeline_command(synth_dir, tmp_path, capsys):
    out = tmp_path / "run"
    code = main.run(
        ["--seed", "2", "pipeline", "--manifest", str(synth_dir / "manifest.csv"), "--out-dir", str(out), "--trees", "5"]
        + SMALL
    )

    assert code == 0
    assert (out / "run.log").is_file()
    assert json.loads((out / "run_manifest.json").read_text(encoding="utf-8"))["root_seed"] == 2
    assert "accuracy" in capsys.readouterr().out


def test_featurize_then_train_then_evaluate(synth_dir, tmp_path):
    features_dir = tmp_path / "features"
    train_dir = tmp_path / "train"
    eval_dir = tmp_path / "eval"

    assert main.run(["featurize", "--manifest", str(synth_dir / "manifest.csv"), "--out-dir", str(features_dir)] + SMALL) == 0
    features = features_dir / "features.csv"
    assert main.run(["train", "--features", str(features), "--out-dir", str(train_dir), "--trees", "5"]) == 0
    code = main.run(
        [
            "evaluate",
            "--model", str(train_dir / "model.json"),
            "--features", str(features),
            "--split", str(train_dir / "split.json"),
            "--out-dir", str(eval_dir),
        ]
    )
    assert code == 0
    assert (eval_dir / "report_test.json").read_bytes() == (train_dir / "report_test.json").read_bytes()


def test_seed_comes_from_the_environment(synth_dir, tmp_path, monkeypatch):
    monkeypatch.setenv("GAZETOPO_SEED", "9")
    reset_settings()
    out = tmp_path / "run"

    main.run(["pipeline", "--manifest", str(synth_dir / "manifest.csv"), "--out-dir", str(out), "--trees", "3"] + SMALL)

    assert json.loads((out / "run_manifest.json").read_text(encoding="utf-8"))["root_seed"] == 9


def test_diagram_command(synth_dir, tmp_path):
    out = tmp_path / "diagram"
    code = main.run(
        ["diagram", "--manifest", str(synth_dir / "manifest.csv"), "--index", "1", "--out-dir", str(out), "--write-clouds"]
        + SMALL
    )

    assert code == 0
    payload = json.loads((out / "diagram.json").read_text(encoding="utf-8"))
    assert payload["label"] == 1
    assert (out / "cloud_raw.csv").is_file()


def test_input_errors_exit_with_one(tmp_path):
    bad = tmp_path / "manifest.csv"
    bad.write_text("path,label\nmissing.csv,0\n", encoding="utf-8")

    assert main.run(["featurize", "--manifest", str(bad), "--out-dir", str(tmp_path / "out")]) == 1
    assert main.run(["train", "--out-dir", str(tmp_path / "out")]) == 1
    assert main.run(["pipeline", "--manifest", str(bad), "--out-dir", str(tmp_path / "out"), "--val-frac", "1.5"]) == 1
    assert main.run(["--log-level", "chatty", "synth", "--out-dir", str(tmp_path / "s")]) == 1


def test_invariant_failures_exit_with_two(tmp_path, monkeypatch):
    from gazetopo.errors import InvariantError

    def broken(*args, **kwargs):
        raise InvariantError("spanning tree has the wrong size")

    monkeypatch.setitem(main.COMMANDS, "synth", broken)
    assert main.run(["synth", "--out-dir", str(tmp_path)]) == 2


def test_usage_mistakes_exit_with_one(tmp_path):
    assert main.run(["frobnicate"]) == 1
    assert main.run(["pipeline", "--out-dir", str(tmp_path), "--trees", "many"]) == 1
    assert main.run(["synth"]) == 1


def test_evaluate_rejects_unknown_partition(synth_dir, tmp_path):
    features_dir = tmp_path / "features"
    train_dir = tmp_path / "train"
    assert main.run(["featurize", "--manifest", str(synth_dir / "manifest.csv"), "--out-dir", str(features_dir)] + SMALL) == 0
    features = features_dir / "features.csv"
    assert main.run(["train", "--features", str(features), "--out-dir", str(train_dir), "--trees", "3"]) == 0

    code = main.run(
        [
            "evaluate",
            "--model", str(train_dir / "model.json"),
            "--features", str(features),
            "--split", str(train_dir / "split.json"),
            "--partitions", "tset",
            "--out-dir", str(tmp_path / "eval"),
        ]
    )
    assert code == 1
