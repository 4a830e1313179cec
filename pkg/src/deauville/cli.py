"""Command-line front end for the Deauville benchmark toolkit.

Verbs mirror the pipeline stages (corpus, extract, preprocess, encoder,
train, predict, eval) plus the orchestrated `run` / `resume` pair.  Exit
codes: 0 success, 2 validation error, 3 training divergence,
4 unrecoverable state.
"""

import json
import sys
from dataclasses import asdict, fields
from pathlib import Path
from typing import Dict, Optional

import click
import numpy as np
import torch
import yaml

from .classifiers import (
    ClassificationHead,
    HeadSpec,
    MultimodalClassifier,
    TextClassifier,
    TrainConfig,
    VisionClassifier,
    VisionSpec,
    build_vision_encoder,
    predict_multimodal,
    predict_text,
    predict_vision,
)
from .corpus.generator import corpus_stats, generate_corpus, generate_generic_texts
from .corpus.io import load_corpus, save_corpus
from .corpus.records import CorpusSpec, ReportDocument
from .encoders import (
    EncoderSpec,
    MlmConfig,
    TransformerEncoder,
    domain_adapt,
    generic_pretrain,
    load_checkpoint,
    masked_token_perplexity,
    save_checkpoint,
)
from .errors import (
    DeauvilleError,
    TrainingDivergenceError,
    UnrecoverableStateError,
    ValidationError,
)
from .evaluation import compare_expert
from .extraction import (
    find_mentions,
    label_report,
    load_grammar,
    mine_context_ngrams,
    redact_report,
)
from .pipeline import bundled_config_path, resume as resume_run, run_experiment
from .pipeline.config import (
    EncoderSettings,
    _train_config_from_dict,
    _vision_spec_from_dict,
)
from .pipeline.runner import (
    _blob_to_state,
    _read_json,
    _read_labels_csv,
    _vision_spec_kwargs,
    _write_json,
    _write_tokens,
    run_fold_job,
)
from .preprocess import (
    DEFAULT_NORMALIZATION,
    build_input,
    load_vocab,
    normalize,
    save_vocab,
    train_subword_vocab,
)
from .preprocess.normalize import NormalizationConfig


def _load_yaml(path: Path) -> Dict:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"file not found: {path}")
    raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ValidationError(f"{path}: expected a mapping")
    return raw


def _grammar_from(path: Optional[str]):
    if path is None:
        return load_grammar(bundled_config_path("default_grammar.txt"))
    return load_grammar(Path(path))


def _resolve_config_path(value: str) -> Path:
    path = Path(value)
    if path.exists():
        return path
    name = value if value.endswith((".yaml", ".yml")) else value + ".yaml"
    bundled = bundled_config_path(name)
    if bundled.exists():
        return bundled
    raise ValidationError(f"config not found: {value}")


def _normalization_from(raw: Dict) -> NormalizationConfig:
    allowed = {f.name for f in fields(NormalizationConfig)}
    unknown = set(raw) - allowed
    if unknown:
        raise ValidationError(f"normalization: unknown keys {sorted(unknown)}")
    data = dict(raw)
    if "synonym_map" in data:
        data["synonym_map"] = tuple(tuple(pair) for pair in data["synonym_map"])
    return NormalizationConfig(**data)


def _text_inputs(records, grammar, norm: NormalizationConfig, vocab, limit: int):
    """Redact, normalize, and encode every report; also extract labels."""
    sequences = {}
    labels = {}
    for exam in records:
        red = redact_report(exam.report, grammar)
        report = ReportDocument(
            indication=normalize(red.indication, norm),
            findings=normalize(red.findings, norm),
            impression=normalize(red.impression, norm),
        )
        sequences[exam.exam_id] = list(build_input(report, vocab, limit=limit).ids)
        label = label_report(exam.report, grammar)
        if label is not None:
            labels[exam.exam_id] = label
    return sequences, labels


@click.group()
def cli():
    """Deauville score prediction benchmark toolkit."""


# --- corpus -----------------------------------------------------------------


@cli.group("corpus")
def corpus_group():
    """Synthetic corpus generation and inspection."""


@corpus_group.command("generate")
@click.option("--spec", "spec_path", required=True, type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path())
def corpus_generate(spec_path, out_dir):
    """Generate a corpus directory from a YAML generation spec."""
    raw = _load_yaml(Path(spec_path))
    allowed = {f.name for f in fields(CorpusSpec)}
    unknown = set(raw) - allowed
    if unknown:
        raise ValidationError(f"corpus spec: unknown keys {sorted(unknown)}")
    if "image_size" in raw:
        raw["image_size"] = tuple(raw["image_size"])
    if "class_weights" in raw:
        raw["class_weights"] = {int(k): float(v) for k, v in raw["class_weights"].items()}
    spec = CorpusSpec(**raw)
    records = generate_corpus(spec)
    save_corpus(records, Path(out_dir), spec=spec)
    stats = corpus_stats(records)
    click.echo(f"wrote {stats['n_exams']} exams to {out_dir} "
               f"({stats['n_labeled']} labeled, {stats['n_unlabeled']} unlabeled)")


@corpus_group.command("stats")
@click.argument("corpus_dir", type=click.Path())
def corpus_stats_cmd(corpus_dir):
    """Print summary statistics for a corpus directory."""
    records, _ = load_corpus(Path(corpus_dir), with_images=False)
    click.echo(json.dumps(corpus_stats(records), sort_keys=True, indent=2))


# --- extract ----------------------------------------------------------------


@cli.group("extract")
def extract_group():
    """Rule-based score extraction and redaction."""


@extract_group.command("labels")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path())
@click.option("--grammar", "grammar_path", type=click.Path(), default=None)
@click.option("--out", "out_path", default="labels.csv", type=click.Path())
def extract_labels(corpus_dir, grammar_path, out_path):
    """Write exam_id,label,n_mentions for every exam (blank label = excluded)."""
    import csv

    grammar = _grammar_from(grammar_path)
    records, _ = load_corpus(Path(corpus_dir), with_images=False)
    n_included = 0
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["exam_id", "label", "n_mentions"])
        for exam in sorted(records, key=lambda e: e.exam_id):
            label = label_report(exam.report, grammar)
            n_mentions = sum(
                len(find_mentions(getattr(exam.report, s), grammar))
                for s in ("indication", "findings", "impression")
            )
            if label is not None:
                n_included += 1
            writer.writerow([exam.exam_id, "" if label is None else label, n_mentions])
    click.echo(f"{n_included} included, {len(records) - n_included} excluded -> {out}")


@extract_group.command("redact")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path())
@click.option("--grammar", "grammar_path", type=click.Path(), default=None)
@click.option("--out", "out_dir", required=True, type=click.Path())
def extract_redact(corpus_dir, grammar_path, out_dir):
    """Write mention-redacted report text for every exam."""
    grammar = _grammar_from(grammar_path)
    records, _ = load_corpus(Path(corpus_dir), with_images=False)
    redacted = {}
    residual = 0
    for exam in sorted(records, key=lambda e: e.exam_id):
        red = redact_report(exam.report, grammar)
        for section in ("indication", "findings", "impression"):
            residual += len(find_mentions(getattr(red, section), grammar))
        redacted[exam.exam_id] = {
            "indication": red.indication,
            "findings": red.findings,
            "impression": red.impression,
        }
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "redacted.json", redacted)
    click.echo(f"redacted {len(redacted)} reports, {residual} residual mentions")


@extract_group.command("ngrams")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path())
@click.option("--term", default="deauville")
@click.option("--top", default=20, type=int)
def extract_ngrams(corpus_dir, term, top):
    """Print the most frequent n-grams near a term across all reports."""
    records, _ = load_corpus(Path(corpus_dir), with_images=False)
    report = mine_context_ngrams([e.report for e in records], term)
    for ngram, count in report.entries[:top]:
        click.echo(f"{count:6d}  {ngram}")


# --- preprocess ---------------------------------------------------------------


@cli.group("preprocess")
def preprocess_group():
    """Normalization, tokenization, and model-input assembly."""


@preprocess_group.command("train-vocab")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--size", default=1500, type=int)
@click.option("--min-pair-frequency", default=2, type=int)
@click.option("--n-texts", default=3000, type=int)
@click.option("--seed", default=17, type=int)
def preprocess_train_vocab(out_path, size, min_pair_frequency, n_texts, seed):
    """Train a subword vocabulary on generated general-domain text."""
    texts = [normalize(t) for t in generate_generic_texts(n_texts, seed)]
    vocab = train_subword_vocab(texts, size, min_pair_frequency=min_pair_frequency)
    save_vocab(vocab, Path(out_path))
    click.echo(f"vocabulary of {len(vocab)} tokens -> {out_path}")


@preprocess_group.command("run")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--vocab", "vocab_path", required=True, type=click.Path())
@click.option("--grammar", "grammar_path", type=click.Path(), default=None)
@click.option("--out", "out_dir", required=True, type=click.Path())
def preprocess_run(corpus_dir, config_path, vocab_path, grammar_path, out_dir):
    """Redact, normalize, and tokenize a corpus into model-input files."""
    raw = _load_yaml(Path(config_path)) if config_path else {}
    norm = _normalization_from(raw.get("normalization", {}))
    limit = int(raw.get("input_limit", 512))
    vocab = load_vocab(Path(vocab_path))
    grammar = _grammar_from(grammar_path)
    records, _ = load_corpus(Path(corpus_dir), with_images=False)
    sequences = {}
    section_maps = {}
    for exam in records:
        red = redact_report(exam.report, grammar)
        report = ReportDocument(
            indication=normalize(red.indication, norm),
            findings=normalize(red.findings, norm),
            impression=normalize(red.impression, norm),
        )
        seq = build_input(report, vocab, limit=limit)
        sequences[exam.exam_id] = list(seq.ids)
        section_maps[exam.exam_id] = {k: list(v) for k, v in seq.section_map.items()}
    exam_ids = sorted(sequences)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_tokens([sequences[i] for i in exam_ids], out / "domain.tokens")
    _write_json(
        out / "domain.sections.json",
        {
            "limit": limit,
            "exam_ids": exam_ids,
            "section_maps": [section_maps[i] for i in exam_ids],
        },
    )
    click.echo(f"tokenized {len(exam_ids)} reports (limit {limit}) -> {out}")


# --- encoder -----------------------------------------------------------------


@cli.group("encoder")
def encoder_group():
    """Masked-language-model pretraining and domain adaptation."""


@encoder_group.command("pretrain-generic")
@click.option("--vocab", "vocab_path", required=True, type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="YAML with an `encoder:` section for model dimensions.")
@click.option("--n-texts", default=3000, type=int)
@click.option("--text-seed", default=17, type=int)
@click.option("--epochs", default=2, type=int)
@click.option("--lr", default=3e-4, type=float)
@click.option("--batch-size", default=32, type=int)
@click.option("--mask-rate", default=0.15, type=float)
@click.option("--limit", default=160, type=int)
@click.option("--seed", default=0, type=int)
def encoder_pretrain_generic(vocab_path, out_dir, config_path, n_texts, text_seed,
                             epochs, lr, batch_size, mask_rate, limit, seed):
    """Pretrain a fresh encoder on generated general-domain text."""
    torch.set_num_threads(1)
    raw = _load_yaml(Path(config_path)) if config_path else {}
    enc_settings = EncoderSettings.from_dict(raw.get("encoder", {}))
    vocab = load_vocab(Path(vocab_path))
    texts = [normalize(t) for t in generate_generic_texts(n_texts, text_seed)]
    seqs = [
        list(build_input(ReportDocument("", "", t), vocab, limit=limit).ids)
        for t in texts
    ]
    spec = EncoderSpec(vocab_size=len(vocab), **asdict(enc_settings))
    torch.manual_seed(seed)
    model = TransformerEncoder(spec)
    config = MlmConfig(
        mask_rate=mask_rate, epochs=epochs, learning_rate=lr,
        batch_size=batch_size, seed=seed,
    )
    history = generic_pretrain(
        model, seqs, vocab.pad_id, vocab.special_ids, vocab.mask_id, config
    )
    save_checkpoint(
        Path(out_dir), model, vocab, "generic-pretrained",
        parent_stage="random-init", history=history,
        lineage=["random-init", "generic-pretrained"],
    )
    last = history[-1]["loss"] if history else float("nan")
    click.echo(f"pretrained {epochs} epochs (final loss {last:.4f}) -> {out_dir}")


@encoder_group.command("adapt")
@click.option("--base", "base_dir", required=True, type=click.Path())
@click.option("--corpus", "corpus_dir", required=True, type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--grammar", "grammar_path", type=click.Path(), default=None)
@click.option("--epochs", default=3, type=int)
@click.option("--lr", default=1e-6, type=float)
@click.option("--batch-size", default=32, type=int)
@click.option("--mask-rate", default=0.15, type=float)
@click.option("--limit", default=None, type=int)
@click.option("--holdout-fraction", default=0.1, type=float)
@click.option("--seed", default=0, type=int)
def encoder_adapt(base_dir, corpus_dir, out_dir, grammar_path, epochs, lr,
                  batch_size, mask_rate, limit, holdout_fraction, seed):
    """Continue masked-language-model training on redacted domain reports."""
    torch.set_num_threads(1)
    model, vocab, meta = load_checkpoint(Path(base_dir))
    if limit is None:
        limit = min(512, model.cfg.max_positions)
    grammar = _grammar_from(grammar_path)
    records, _ = load_corpus(Path(corpus_dir), with_images=False)
    sequences, _labels = _text_inputs(
        records, grammar, DEFAULT_NORMALIZATION, vocab, limit
    )
    seqs = [sequences[i] for i in sorted(sequences)]
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, 4242))))
    perm = rng.permutation(len(seqs))
    n_holdout = max(1, int(round(holdout_fraction * len(seqs))))
    holdout = [seqs[int(i)] for i in perm[:n_holdout]]
    train = [seqs[int(i)] for i in perm[n_holdout:]]
    ppl_before = masked_token_perplexity(
        model, holdout, vocab.pad_id, vocab.special_ids, vocab.mask_id, seed=seed
    )
    config = MlmConfig(
        mask_rate=mask_rate, epochs=epochs, learning_rate=lr,
        batch_size=batch_size, seed=seed,
    )
    history = domain_adapt(
        model, train, vocab.pad_id, vocab.special_ids, vocab.mask_id, config
    )
    ppl_after = masked_token_perplexity(
        model, holdout, vocab.pad_id, vocab.special_ids, vocab.mask_id, seed=seed
    )
    save_checkpoint(
        Path(out_dir), model, vocab, "domain-adapted",
        parent_stage=meta["stage"], history=history,
    )
    click.echo(json.dumps({
        "ppl_before": round(ppl_before, 4),
        "ppl_after": round(ppl_after, 4),
        "drop": round((ppl_before - ppl_after) / ppl_before, 4),
        "out": str(out_dir),
    }, sort_keys=True))


# --- train / predict -----------------------------------------------------------


@cli.command("train")
@click.argument("mode", type=click.Choice(["text", "vision", "multimodal"]))
@click.option("--split", "split_path", required=True, type=click.Path(),
              help="JSON with train/val (and optional test) exam-id lists.")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--corpus", "corpus_dir", required=True, type=click.Path())
@click.option("--encoder", "encoder_dir", type=click.Path(), default=None,
              help="Encoder checkpoint (required for text and multimodal).")
@click.option("--grammar", "grammar_path", type=click.Path(), default=None)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", default=0, type=int)
def train_cmd(mode, split_path, config_path, corpus_dir, encoder_dir,
              grammar_path, out_dir, seed):
    """Train a single classifier on an explicit train/val split."""
    torch.set_num_threads(1)
    split = _read_json(Path(split_path))
    for key in ("train", "val"):
        if key not in split or not split[key]:
            raise ValidationError(f"split file must list non-empty {key!r} ids")
    raw = _load_yaml(Path(config_path)) if config_path else {}
    if "train" in raw:
        train_raw = raw["train"].get(mode, {})
    else:
        known = {f.name for f in fields(TrainConfig)}
        train_raw = {k: v for k, v in raw.items() if k in known}
    train_config = _train_config_from_dict(train_raw, f"train.{mode}")
    vision_spec = (
        _vision_spec_from_dict(raw["vision"]) if "vision" in raw else VisionSpec()
    )
    norm = _normalization_from(raw.get("normalization", {}))
    limit = int(raw.get("input_limit", 160))

    needs_text = mode in ("text", "multimodal")
    needs_images = mode in ("vision", "multimodal")
    if needs_text and encoder_dir is None:
        raise ValidationError(f"--encoder is required for {mode} training")
    grammar_file = (
        Path(grammar_path) if grammar_path else bundled_config_path("default_grammar.txt")
    )
    grammar = load_grammar(grammar_file)
    records, _ = load_corpus(Path(corpus_dir), with_images=needs_images)

    if needs_text:
        _model, vocab, _meta = load_checkpoint(Path(encoder_dir))
        sequences, labels = _text_inputs(records, grammar, norm, vocab, limit)
        pad_id = vocab.pad_id
    else:
        sequences = {}
        pad_id = 0
        labels = {
            e.exam_id: label_report(e.report, grammar)
            for e in records
        }
        labels = {k: v for k, v in labels.items() if v is not None}
    images = {e.exam_id: e.image.pixels for e in records if e.image is not None}

    for key in ("train", "val", "test"):
        for exam_id in split.get(key, []):
            if exam_id not in labels:
                raise ValidationError(
                    f"split {key!r} id {exam_id!r} has no extracted label"
                )

    payload = {
        "arm": mode,
        "iteration": 0,
        "seed": seed,
        "train_ids": list(split["train"]),
        "val_ids": list(split["val"]),
        "test_ids": list(split.get("test", [])),
        "train_config": asdict(train_config),
        "vision_spec": asdict(vision_spec),
        "input_limit": limit,
        "normalization": asdict(norm),
        "encoder_checkpoint": str(encoder_dir) if encoder_dir else "",
        "grammar_path": str(grammar_file),
        "bundle_dir": str(out_dir),
        "preds_path": str(Path(out_dir) / "preds.csv"),
    }
    context = {"sequences": sequences, "labels": labels, "pad_id": pad_id,
               "images": images}
    result = run_fold_job(payload, context)
    click.echo(
        f"trained {mode} model: best epoch {result['best_epoch'] + 1} of "
        f"{result['epochs_run']} -> {out_dir}"
    )


@cli.command("predict")
@click.option("--model", "model_dir", required=True, type=click.Path())
@click.option("--corpus", "corpus_dir", required=True, type=click.Path())
@click.option("--out", "out_path", default="preds.csv", type=click.Path())
def predict_cmd(model_dir, corpus_dir, out_path):
    """Score every exam in a corpus with a trained model bundle."""
    from .pipeline.runner import write_preds_csv

    torch.set_num_threads(1)
    model_dir = Path(model_dir)
    info = _read_json(model_dir / "model.json")
    if info.get("format") != "deauville-model/1":
        raise UnrecoverableStateError(f"{model_dir} is not a model bundle")
    modality = info["modality"]

    head_raw = dict(info["head_spec"])
    if head_raw.get("hidden_dims") is not None:
        head_raw["hidden_dims"] = tuple(head_raw["hidden_dims"])
    head = ClassificationHead(HeadSpec(**head_raw))
    head.load_state_dict(_blob_to_state(
        (model_dir / "head.bin").read_bytes(),
        info["head"]["param_order"], info["head"]["shapes"],
    ))

    needs_images = modality in ("vision", "multimodal")
    records, _ = load_corpus(Path(corpus_dir), with_images=needs_images)
    records = sorted(records, key=lambda e: e.exam_id)
    exam_ids = [e.exam_id for e in records]

    if modality in ("text", "multimodal"):
        encoder, vocab, _meta = load_checkpoint(model_dir / info["encoder_dir"])
        grammar = load_grammar(model_dir / "grammar.txt")
        norm_raw = dict(info["normalization"])
        norm_raw["synonym_map"] = tuple(tuple(p) for p in norm_raw["synonym_map"])
        norm = NormalizationConfig(**norm_raw)
        sequences, _labels = _text_inputs(
            records, grammar, norm, vocab, int(info["input_limit"])
        )
        seqs = [sequences[i] for i in exam_ids]
    if needs_images:
        missing = [e.exam_id for e in records if e.image is None]
        if missing:
            raise ValidationError(
                f"{len(missing)} exams have no image (first: {missing[0]!r})"
            )
        vision_spec = VisionSpec(**_vision_spec_kwargs(info["vision_spec"]))
        vision_encoder = build_vision_encoder(vision_spec)
        vision_encoder.load_state_dict(_blob_to_state(
            (model_dir / "vision.bin").read_bytes(),
            info["vision"]["param_order"], info["vision"]["shapes"],
        ))
        images = [e.image.pixels for e in records]

    if modality == "text":
        model = TextClassifier(encoder, head)
        preds, probs = predict_text(model, seqs, vocab.pad_id)
    elif modality == "vision":
        model = VisionClassifier(vision_encoder, head)
        preds, probs = predict_vision(model, images)
    else:
        model = MultimodalClassifier(encoder, vision_encoder, head)
        preds, probs = predict_multimodal(model, seqs, images, vocab.pad_id)

    write_preds_csv(Path(out_path), exam_ids, probs, preds)
    click.echo(f"scored {len(exam_ids)} exams -> {out_path}")


# --- eval / run / resume --------------------------------------------------------


@cli.group("eval")
def eval_group():
    """Benchmark execution and expert-file comparison."""


@eval_group.command("run")
@click.option("--bench", required=True,
              help="Experiment config path or bundled name (e.g. desk_bench).")
@click.option("--out", "out_dir", required=True, type=click.Path())
def eval_run(bench, out_dir):
    """Run the full benchmark described by a config."""
    path = _resolve_config_path(bench)
    out = run_experiment(path, Path(out_dir))
    click.echo(f"benchmark complete -> {out / 'eval' / 'results.csv'}")


@eval_group.command("expert")
@click.option("--file", "expert_path", required=True, type=click.Path())
@click.option("--truth", "truth_path", required=True, type=click.Path())
def eval_expert(expert_path, truth_path):
    """Score an expert predictions file against extracted truth labels."""
    truths = {
        k: v
        for k, v in _read_labels_csv(Path(truth_path)).items()
        if v is not None
    }
    comparison = compare_expert(Path(expert_path), truths)
    click.echo(json.dumps({
        "n_cases": comparison.n_cases,
        "accuracy": round(comparison.accuracy, 6),
        "kappa_linear": round(comparison.kappa_linear, 6),
        "kappa_quadratic": round(comparison.kappa_quadratic, 6),
    }, sort_keys=True))


@cli.command("run")
@click.option("--config", "config_value", required=True,
              help="Experiment config path or bundled name.")
@click.option("--out", "out_dir", required=True, type=click.Path())
def run_cmd(config_value, out_dir):
    """Run every stage of an experiment into an output directory."""
    path = _resolve_config_path(config_value)
    out = run_experiment(path, Path(out_dir))
    click.echo(f"run complete -> {out}")


@cli.command("resume")
@click.argument("out_dir", type=click.Path())
def resume_cmd(out_dir):
    """Continue an interrupted run from its manifest."""
    out = resume_run(Path(out_dir))
    click.echo(f"resume complete -> {out}")


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=True)
    except ValidationError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(2)
    except TrainingDivergenceError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(3)
    except UnrecoverableStateError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(4)
    except DeauvilleError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    main()
