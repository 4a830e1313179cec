"""End-to-end pipeline runner: staging, manifest, resume, determinism."""

import csv
import json
from pathlib import Path

import pytest

from deauville.errors import UnrecoverableStateError, ValidationError
from deauville.pipeline import (
    MANIFEST_FORMAT,
    STAGE_ORDER,
    RunManifest,
    read_preds_csv,
    resume,
    run_experiment,
)

MINI = {
    "seed": 3,
    "workers": 1,
    "arms": ["text-generic", "text-da", "vision", "multimodal"],
    "corpus": {"n_exams": 120, "seed": 21, "image_size": [32, 32]},
    "vocab": {"size": 350, "generic_texts": 250, "generic_seed": 5},
    "input_limit": 64,
    "encoder": {
        "n_layers": 1,
        "n_heads": 2,
        "hidden_size": 32,
        "ff_size": 64,
        "max_positions": 128,
    },
    "pretrain": {"epochs": 1, "learning_rate": 3e-4},
    "adapt": {"mlm": {"epochs": 1, "learning_rate": 1e-4}, "holdout_fraction": 0.2},
    "train": {
        "text": {"max_epochs": 2, "early_stop_patience": 1, "batch_size": 16},
        "vision": {"max_epochs": 2, "early_stop_patience": 1, "batch_size": 16},
        "multimodal": {"max_epochs": 2, "early_stop_patience": 1, "batch_size": 16},
    },
    "vision": {"kind": "convolutional", "input_size": [32, 32], "hidden_size": 32},
    "evaluation": {
        "n_iterations": 2,
        "fractions": [0.7, 0.15, 0.15],
        "expert": {"n_cases": 10},
    },
}


@pytest.fixture(scope="module")
def mini_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run") / "a"
    run_experiment(MINI, out)
    return out


@pytest.fixture(scope="module")
def mini_rerun(tmp_path_factory):
    out = tmp_path_factory.mktemp("run") / "b"
    run_experiment(MINI, out)
    return out


def test_all_stages_complete(mini_run):
    man = RunManifest.load(mini_run)
    assert man.data["format"] == MANIFEST_FORMAT
    for stage in STAGE_ORDER:
        assert man.stage_complete(stage), stage


def test_manifest_artifacts_verify(mini_run):
    man = RunManifest.load(mini_run)
    for stage in STAGE_ORDER:
        man.verify_stage(stage)


def test_manifest_covers_key_artifacts(mini_run):
    man = RunManifest.load(mini_run)
    recorded = set()
    for entry in man.data["stages"].values():
        recorded.update(entry.get("artifacts", {}))
    for rel in (
        "corpus/manifest.json",
        "extract/labels.csv",
        "preprocess/vocab.txt",
        "encoders/adaptation_metrics.json",
        "splits.json",
        "eval/results.csv",
        "eval/accuracy_chart.svg",
    ):
        assert rel in recorded, rel


def test_results_csv_shape(mini_run):
    with open(mini_run / "eval" / "results.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 8  # 4 arms x 2 weightings
    assert {r["model"] for r in rows} == set(MINI["arms"])
    assert {r["weighting"] for r in rows} == {"linear", "quadratic"}
    for row in rows:
        assert 0.0 <= float(row["acc_mean"]) <= 1.0


def test_preds_match_test_sets(mini_run):
    splits = json.loads((mini_run / "splits.json").read_text())
    for arm in MINI["arms"]:
        for plan in splits["plans"]:
            it = plan["iteration"]
            preds = read_preds_csv(mini_run / "preds" / f"{arm}_fold_{it}.csv")
            assert {exam_id for exam_id, _, _ in preds} == set(plan["test_ids"])
            for _, probs, predicted in preds:
                assert predicted in (1, 2, 3, 4, 5)
                assert abs(sum(probs) - 1.0) < 1e-4


def test_fold_results_recorded(mini_run):
    summary = json.loads((mini_run / "eval" / "fold_results.json").read_text())
    assert set(summary) == set(MINI["arms"])
    for rows in summary.values():
        assert len(rows) == MINI["evaluation"]["n_iterations"]
        assert all(0.0 <= r["accuracy"] <= 1.0 for r in rows)
    man = RunManifest.load(mini_run)
    assert "da_fold_wins" in man.data["stages"]["evaluate"]["meta"]


def test_adaptation_metrics(mini_run):
    metrics = json.loads(
        (mini_run / "encoders" / "adaptation_metrics.json").read_text()
    )
    assert metrics["ppl_before"] > 0
    assert metrics["ppl_after"] > 0
    assert metrics["n_holdout"] >= 1
    assert metrics["drop"] == pytest.approx(
        (metrics["ppl_before"] - metrics["ppl_after"]) / metrics["ppl_before"]
    )


def test_identical_config_reproduces_bytes(mini_run, mini_rerun):
    for rel in ("eval/results.csv", "eval/accuracy_chart.svg", "extract/labels.csv"):
        assert (mini_run / rel).read_bytes() == (mini_rerun / rel).read_bytes(), rel


def test_resume_finished_run_is_noop(mini_run):
    before = (mini_run / "eval" / "results.csv").read_bytes()
    stamp = (mini_run / "manifest.json").read_bytes()
    resume(mini_run)
    assert (mini_run / "eval" / "results.csv").read_bytes() == before
    assert (mini_run / "manifest.json").read_bytes() == stamp


def test_rerun_same_dir_same_config_is_noop(mini_run):
    before = (mini_run / "manifest.json").read_bytes()
    run_experiment(MINI, mini_run)
    assert (mini_run / "manifest.json").read_bytes() == before


def test_rerun_same_dir_different_config_rejected(mini_run):
    other = dict(MINI, seed=4)
    with pytest.raises(ValidationError, match="different config"):
        run_experiment(other, mini_run)


def test_tampered_artifact_fails_resume(mini_run, tmp_path):
    import shutil

    clone = tmp_path / "tampered"
    shutil.copytree(mini_run, clone)
    target = clone / "preprocess" / "vocab.txt"
    target.write_text(target.read_text() + "zzz\n")
    with pytest.raises(UnrecoverableStateError, match="checksum"):
        resume(clone)


def test_corrupted_manifest_is_unrecoverable(mini_run, tmp_path):
    import shutil

    clone = tmp_path / "corrupt"
    shutil.copytree(mini_run, clone)
    (clone / "manifest.json").write_text("{not json")
    with pytest.raises(UnrecoverableStateError, match="corrupt"):
        resume(clone)


def test_resume_without_manifest(tmp_path):
    with pytest.raises(UnrecoverableStateError, match="manifest"):
        resume(tmp_path)


def test_missing_grammar_rejected_before_compute(tmp_path):
    cfg = dict(MINI, grammar=str(tmp_path / "absent.txt"))
    with pytest.raises(ValidationError, match="grammar"):
        run_experiment(cfg, tmp_path / "out")
    assert not (tmp_path / "out" / "manifest.json").exists()


def test_failed_stage_recorded(tmp_path):
    # manifest.json exists so path validation passes, but the stage
    # itself rejects the unrecognized format and must record the failure
    corpus_dir = tmp_path / "corpus"
    corpus_dir.mkdir()
    (corpus_dir / "manifest.json").write_text("{}")
    cfg = dict(MINI, corpus={"path": str(corpus_dir)})
    out = tmp_path / "out"
    with pytest.raises(ValidationError, match="stage 'corpus' failed"):
        run_experiment(cfg, out)
    man = json.loads((out / "manifest.json").read_text())
    assert man["stages"]["corpus"]["status"] == "failed"
    assert "error" in man["stages"]["corpus"]
