"""End-to-end smoke of the command line, exercising the whole toolchain
on a tiny dataset: generate, train, extract, fit an expert, crossval,
report, agreement.
"""

import json

import pytest

from lusbio.cli import main

FAST = {
    "epochs": 2,
    "channels": 8,
    "blocks": 1,
    "frame_side": 32,
    "clip_count_eval": 1,
    "frames_per_clip": 5,
}


@pytest.fixture(scope="module")
def work(tmp_path_factory, capfd=None):
    """Run the pipeline once; individual tests inspect the artifacts."""
    d = tmp_path_factory.mktemp("cli")
    (d / "fast.json").write_text(json.dumps({"train_config": FAST}))
    main(["synth-gen", "--patients", "8", "--videos", "2",
          "--out", str(d / "data")])
    main(["train-bio", "--manifest", str(d / "data" / "manifest.json"),
          "--config", str(d / "fast.json"), "--out", str(d / "bio.luse")])
    main(["extract-features", "--manifest", str(d / "data" / "manifest.json"),
          "--checkpoint", str(d / "bio.luse"), "--config", str(d / "fast.json"),
          "--mode", "biomarker", "--out", str(d / "feat.csv")])
    main(["fit-expert", "--manifest", str(d / "data" / "manifest.json"),
          "--features", str(d / "feat.csv"), "--task", "severity",
          "--kind", "DecisionTree", "--out", str(d / "expert.lusx")])
    return d


def test_synth_gen_wrote_manifest(work):
    doc = json.loads((work / "data" / "manifest.json").read_text())
    assert len(doc["records"]) == 16


def test_train_bio_wrote_checkpoint_and_history(work):
    assert (work / "bio.luse").read_bytes()[:4] == b"LUSE"
    history = (work / "bio.history.csv").read_text().strip().splitlines()
    assert len(history) == 1 + FAST["epochs"]


def test_train_e2e_warm_start(work, capsys):
    main(["train-e2e", "--manifest", str(work / "data" / "manifest.json"),
          "--task", "severity", "--config", str(work / "fast.json"),
          "--init", str(work / "bio.luse"), "--out", str(work / "e2e.luse")])
    assert "best epoch" in capsys.readouterr().out


def test_extract_features_row_per_video(work):
    rows = (work / "feat.csv").read_text().strip().splitlines()
    assert len(rows) == 16
    first = rows[0].split(",")
    assert len(first) == 1 + 38  # video_id + biomarker probabilities


def test_fit_expert_saved(work):
    assert (work / "expert.lusx").read_bytes()[:4] == b"LUSX"


def test_crossval_and_report(work, capsys):
    cfg = {
        "method": "Bio_Expert", "task": "severity", "expert_kind": "DecisionTree",
        "train_config": FAST,
        "synth_params": {"n_patients": 8, "videos_per_patient": 2, "seed": 1},
    }
    (work / "cell.json").write_text(json.dumps(cfg))
    main(["crossval", "--config", str(work / "cell.json"),
          "--out", str(work / "result.json")])
    assert "accuracy" in capsys.readouterr().out
    main(["report", str(work / "result.json"), "--format", "csv",
          "--out", str(work / "report.csv")])
    header = (work / "report.csv").read_text().splitlines()[0]
    assert "auc_ovo_weighted" in header


def test_agreement(work, capsys, tmp_path):
    a = [{"video_id": "v1", "label": 2}, {"video_id": "v2", "label": 0}]
    b = [{"video_id": "v1", "label": 2}, {"video_id": "v2", "label": 1}]
    (tmp_path / "a.json").write_text(json.dumps(a))
    (tmp_path / "b.json").write_text(json.dumps(b))
    main(["agreement", str(tmp_path / "a.json"), str(tmp_path / "b.json"),
          "--out", str(tmp_path / "agree.json")])
    out = capsys.readouterr().out
    assert "agreement accuracy" in out
    doc = json.loads((tmp_path / "agree.json").read_text())
    assert doc["n"] == 2
