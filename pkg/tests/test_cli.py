"""Command-line interface: verbs, outputs, and exit-code mapping."""

import csv
import json
from pathlib import Path

import pytest
import yaml

from deauville.cli import main


def run_cli(args, capsys):
    """Invoke the CLI in-process; returns (exit_code, stdout, stderr)."""
    with pytest.raises(SystemExit) as excinfo:
        main(list(args))
    out, err = capsys.readouterr()
    return excinfo.value.code or 0, out, err


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    """Corpus + vocab + encoder + config built once through the CLI itself."""
    root = tmp_path_factory.mktemp("cli")
    spec = root / "corpus_spec.yaml"
    spec.write_text(yaml.safe_dump({
        "n_exams": 60,
        "seed": 13,
        "unlabeled_fraction": 0.2,
        "with_images": True,
        "image_size": [32, 32],
    }))
    config = root / "config.yaml"
    config.write_text(yaml.safe_dump({
        "input_limit": 48,
        "encoder": {
            "n_layers": 1, "n_heads": 2, "hidden_size": 32,
            "ff_size": 64, "max_positions": 64,
        },
        "train": {
            "text": {"max_epochs": 2, "early_stop_patience": 1, "batch_size": 16},
        },
        "vision": {"kind": "convolutional", "input_size": [32, 32], "hidden_size": 16},
    }))
    return {"root": root, "spec": spec, "config": config,
            "corpus": root / "corpus", "vocab": root / "vocab.txt",
            "encoder": root / "encoder"}


@pytest.fixture(scope="module")
def cli_corpus(work):
    with pytest.raises(SystemExit) as e:
        main(["corpus", "generate", "--spec", str(work["spec"]),
              "--out", str(work["corpus"])])
    assert (e.value.code or 0) == 0
    return work["corpus"]


@pytest.fixture(scope="module")
def cli_vocab(work):
    with pytest.raises(SystemExit) as e:
        main(["preprocess", "train-vocab", "--out", str(work["vocab"]),
              "--size", "150", "--n-texts", "80", "--seed", "5"])
    assert (e.value.code or 0) == 0
    return work["vocab"]


@pytest.fixture(scope="module")
def cli_encoder(work, cli_vocab):
    with pytest.raises(SystemExit) as e:
        main(["encoder", "pretrain-generic", "--vocab", str(cli_vocab),
              "--out", str(work["encoder"]), "--config", str(work["config"]),
              "--n-texts", "40", "--epochs", "1", "--limit", "48"])
    assert (e.value.code or 0) == 0
    return work["encoder"]


def test_corpus_generate_and_stats(cli_corpus, capsys):
    code, out, _ = run_cli(["corpus", "stats", str(cli_corpus)], capsys)
    assert code == 0
    stats = json.loads(out)
    assert stats["n_exams"] == 60
    assert stats["n_labeled"] + stats["n_unlabeled"] == 60


def test_extract_labels(work, cli_corpus, capsys):
    out_csv = work["root"] / "labels.csv"
    code, out, _ = run_cli(
        ["extract", "labels", "--corpus", str(cli_corpus), "--out", str(out_csv)],
        capsys,
    )
    assert code == 0
    with open(out_csv, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 60
    assert set(rows[0]) == {"exam_id", "label", "n_mentions"}
    labeled = [r for r in rows if r["label"]]
    assert labeled and all(r["label"] in "12345" for r in labeled)
    assert f"{len(labeled)} included" in out


def test_extract_redact(work, cli_corpus, capsys):
    out_dir = work["root"] / "redacted"
    code, out, _ = run_cli(
        ["extract", "redact", "--corpus", str(cli_corpus), "--out", str(out_dir)],
        capsys,
    )
    assert code == 0
    assert "0 residual mentions" in out
    redacted = json.loads((out_dir / "redacted.json").read_text())
    assert len(redacted) == 60


def test_extract_ngrams(cli_corpus, capsys):
    code, out, _ = run_cli(
        ["extract", "ngrams", "--corpus", str(cli_corpus), "--term", "deauville"],
        capsys,
    )
    assert code == 0
    assert out.strip(), "expected at least one n-gram line"


def test_preprocess_run(work, cli_corpus, cli_vocab, capsys):
    out_dir = work["root"] / "pre"
    code, out, _ = run_cli(
        ["preprocess", "run", "--corpus", str(cli_corpus),
         "--config", str(work["config"]), "--vocab", str(cli_vocab),
         "--out", str(out_dir)],
        capsys,
    )
    assert code == 0
    lines = (out_dir / "domain.tokens").read_text().splitlines()
    assert len(lines) == 60
    assert all(len(line.split()) <= 48 for line in lines)
    sidecar = json.loads((out_dir / "domain.sections.json").read_text())
    assert sidecar["limit"] == 48
    assert len(sidecar["exam_ids"]) == 60


def test_train_and_predict_text(work, cli_corpus, cli_encoder, capsys):
    with open(work["root"] / "labels.csv", newline="") as fh:
        labeled_ids = [r["exam_id"] for r in csv.DictReader(fh) if r["label"]]
    assert len(labeled_ids) >= 30
    split = work["root"] / "split.json"
    split.write_text(json.dumps({
        "train": labeled_ids[:24],
        "val": labeled_ids[24:30],
        "test": labeled_ids[30:36],
    }))
    model_dir = work["root"] / "text_model"
    code, out, _ = run_cli(
        ["train", "text", "--split", str(split), "--config", str(work["config"]),
         "--corpus", str(cli_corpus), "--encoder", str(cli_encoder),
         "--out", str(model_dir), "--seed", "1"],
        capsys,
    )
    assert code == 0
    assert (model_dir / "head.bin").exists()
    assert (model_dir / "train_log.csv").exists()
    assert (model_dir / "model.json").exists()

    preds_csv = work["root"] / "preds.csv"
    code, out, _ = run_cli(
        ["predict", "--model", str(model_dir), "--corpus", str(cli_corpus),
         "--out", str(preds_csv)],
        capsys,
    )
    assert code == 0
    with open(preds_csv, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 60
    assert set(rows[0]) == {"exam_id", "p1", "p2", "p3", "p4", "p5", "predicted"}
    for row in rows:
        probs = [float(row[f"p{i}"]) for i in range(1, 6)]
        assert abs(sum(probs) - 1.0) < 1e-4


def test_train_log_format(work, cli_corpus, cli_encoder):
    log = work["root"] / "text_model" / "train_log.csv"
    with open(log, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert set(rows[0]) == {"epoch", "train_loss", "val_loss", "val_acc"}
    assert [int(r["epoch"]) for r in rows] == list(range(1, len(rows) + 1))


def test_eval_expert(work, cli_corpus, capsys):
    with open(work["root"] / "labels.csv", newline="") as fh:
        labeled = [(r["exam_id"], int(r["label"]))
                   for r in csv.DictReader(fh) if r["label"]]
    expert = work["root"] / "expert.csv"
    with open(expert, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["exam_id", "predicted_ds"])
        for exam_id, label in labeled[:12]:
            writer.writerow([exam_id, label])
    code, out, _ = run_cli(
        ["eval", "expert", "--file", str(expert),
         "--truth", str(work["root"] / "labels.csv")],
        capsys,
    )
    assert code == 0
    report = json.loads(out)
    assert report["n_cases"] == 12
    assert report["accuracy"] == 1.0


def test_validation_error_exits_2(work, capsys):
    code, _, err = run_cli(
        ["run", "--config", str(work["root"] / "missing.yaml"),
         "--out", str(work["root"] / "never")],
        capsys,
    )
    assert code == 2
    assert "error:" in err


def test_unrecoverable_state_exits_4(tmp_path, capsys):
    code, _, err = run_cli(["resume", str(tmp_path)], capsys)
    assert code == 4
    assert "manifest" in err


def test_training_divergence_exits_3(work, cli_corpus, cli_encoder, capsys):
    with open(work["root"] / "labels.csv", newline="") as fh:
        labeled_ids = [r["exam_id"] for r in csv.DictReader(fh) if r["label"]]
    split = work["root"] / "diverge_split.json"
    split.write_text(json.dumps({
        "train": labeled_ids[:24], "val": labeled_ids[24:30],
    }))
    config = work["root"] / "diverge.yaml"
    config.write_text(yaml.safe_dump({
        "input_limit": 48,
        "train": {"text": {"learning_rate": 1e9, "max_epochs": 3,
                           "early_stop_patience": 1, "batch_size": 16}},
    }))
    code, _, err = run_cli(
        ["train", "text", "--split", str(split), "--config", str(config),
         "--corpus", str(cli_corpus), "--encoder", str(cli_encoder),
         "--out", str(work["root"] / "diverged")],
        capsys,
    )
    assert code == 3
    assert "error:" in err


def test_bad_split_id_rejected(work, cli_corpus, cli_encoder, capsys):
    split = work["root"] / "bad_split.json"
    split.write_text(json.dumps({"train": ["nope"], "val": ["nope"]}))
    code, _, err = run_cli(
        ["train", "text", "--split", str(split), "--config", str(work["config"]),
         "--corpus", str(cli_corpus), "--encoder", str(cli_encoder),
         "--out", str(work["root"] / "never2")],
        capsys,
    )
    assert code == 2
    assert "no extracted label" in err
