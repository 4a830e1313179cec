"""Stage-oriented experiment runner with a checksummed manifest.

Every stage reads its inputs from files the previous stages wrote, so a
run can be resumed after an interruption: completed stages verify by
checksum and are skipped, the rest re-run.  All randomness is seeded from
the config, and workers only ever write fold-local files, which makes
rerunning a config byte-reproducible in the result files.
"""

import csv
import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace
from multiprocessing import get_context
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch

from ..classifiers import (
    ClassificationHead,
    HeadSpec,
    MultimodalClassifier,
    MultimodalDataset,
    TextClassifier,
    TextDataset,
    VisionClassifier,
    VisionDataset,
    VisionSpec,
    build_vision_encoder,
    predict_multimodal,
    predict_text,
    predict_vision,
    train_classifier,
)
from ..classifiers.training import TrainConfig, TrainResult
from ..corpus.generator import corpus_stats, generate_corpus, generate_generic_texts
from ..corpus.io import load_corpus, load_manifest, save_corpus
from ..corpus.records import ReportDocument
from ..encoders import (
    EncoderSpec,
    TransformerEncoder,
    domain_adapt,
    generic_pretrain,
    load_checkpoint,
    masked_token_perplexity,
    save_checkpoint,
)
from ..errors import DeauvilleError, UnrecoverableStateError, ValidationError
from ..evaluation import (
    FoldResult,
    aggregate,
    compare_expert,
    confusion_filename,
    fold_result,
    make_splits,
    render_accuracy_chart,
    simulate_expert_review,
    write_confusion_csv,
    write_expert_csv,
    write_results_csv,
)
from ..extraction import find_mentions, label_report, load_grammar, redact_report
from ..preprocess import SubwordVocab, build_input, load_vocab, normalize, save_vocab, train_subword_vocab
from ..preprocess.normalize import NormalizationConfig
from .config import ARMS, ExperimentConfig, config_from_mapping_or_yaml, derive_seed

STAGE_ORDER = ("corpus", "extract", "preprocess", "encoders", "train", "evaluate", "report")

MANIFEST_FORMAT = "deauville-run/1"

_TEXT_ARMS = ("text-generic", "text-da")


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _read_json(path: Path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _state_to_blob(state: Dict[str, torch.Tensor]) -> Tuple[bytes, List[str], Dict[str, List[int]]]:
    order = sorted(state)
    shapes = {}
    blobs = []
    for name in order:
        tensor = state[name].detach().cpu().to(torch.float32)
        shapes[name] = list(tensor.shape)
        blobs.append(tensor.numpy().astype("<f4").tobytes())
    return b"".join(blobs), order, shapes


def _blob_to_state(
    blob: bytes, order: Sequence[str], shapes: Dict[str, List[int]]
) -> Dict[str, torch.Tensor]:
    state = {}
    offset = 0
    for name in order:
        shape = shapes[name]
        count = int(np.prod(shape)) if shape else 1
        raw = blob[offset : offset + 4 * count]
        if len(raw) != 4 * count:
            raise UnrecoverableStateError(f"weight blob truncated at {name}")
        offset += 4 * count
        state[name] = torch.from_numpy(np.frombuffer(raw, dtype="<f4").reshape(shape).copy())
    if offset != len(blob):
        raise UnrecoverableStateError("weight blob holds trailing bytes")
    return state


class RunManifest:
    """The run's provenance ledger: config, stage status, artifact hashes."""

    def __init__(self, out_dir: Path, data: Dict):
        self.out_dir = Path(out_dir)
        self.data = data

    @property
    def path(self) -> Path:
        return self.out_dir / "manifest.json"

    @classmethod
    def new(cls, out_dir: Path, config: ExperimentConfig) -> "RunManifest":
        data = {
            "format": MANIFEST_FORMAT,
            "config": config.resolved(),
            "config_hash": config.config_hash(),
            "stage_order": list(STAGE_ORDER),
            "stages": {},
        }
        man = cls(out_dir, data)
        man.save()
        return man

    @classmethod
    def load(cls, out_dir: Path) -> "RunManifest":
        path = Path(out_dir) / "manifest.json"
        if not path.exists():
            raise UnrecoverableStateError(f"no manifest.json under {out_dir}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError) as e:
            raise UnrecoverableStateError(f"manifest is corrupted: {e}") from e
        for key in ("format", "config", "config_hash", "stages"):
            if key not in data:
                raise UnrecoverableStateError(f"manifest missing {key!r}")
        if data["format"] != MANIFEST_FORMAT:
            raise UnrecoverableStateError(f"unknown manifest format {data['format']!r}")
        try:
            rebuilt = ExperimentConfig.from_dict(data["config"]).config_hash()
        except DeauvilleError as e:
            raise UnrecoverableStateError(f"manifest config invalid: {e}") from e
        if rebuilt != data["config_hash"]:
            raise UnrecoverableStateError("manifest config hash does not match its config")
        return cls(out_dir, data)

    def save(self) -> None:
        tmp = self.path.with_suffix(".json.tmp")
        tmp.write_text(
            json.dumps(self.data, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        os.replace(tmp, self.path)

    def stage_complete(self, name: str) -> bool:
        entry = self.data["stages"].get(name)
        return bool(entry) and entry.get("status") == "complete"

    def record_stage(self, name: str, artifacts: Sequence[Path], meta: Dict) -> None:
        hashed = {}
        for path in sorted(Path(p) for p in artifacts):
            rel = path.relative_to(self.out_dir).as_posix()
            hashed[rel] = _sha256_file(path)
        self.data["stages"][name] = {
            "status": "complete",
            "artifacts": hashed,
            "meta": meta,
        }
        self.save()

    def record_failure(self, name: str, error: Exception) -> None:
        self.data["stages"][name] = {
            "status": "failed",
            "error": f"{type(error).__name__}: {error}",
        }
        self.save()

    def verify_stage(self, name: str) -> None:
        entry = self.data["stages"].get(name)
        if not entry or entry.get("status") != "complete":
            raise UnrecoverableStateError(f"stage {name!r} is not recorded complete")
        for rel, expected in entry.get("artifacts", {}).items():
            path = self.out_dir / rel
            if not path.exists():
                raise UnrecoverableStateError(f"stage {name!r}: missing artifact {rel}")
            if _sha256_file(path) != expected:
                raise UnrecoverableStateError(f"stage {name!r}: checksum mismatch on {rel}")


def _arm_seed(master: int, arm: str, iteration: int) -> int:
    # Both text arms draw from one stream so their fine-tuning runs are a
    # paired comparison: same head init, same batch order, only the encoder
    # start differs.
    index = 0 if arm in _TEXT_ARMS else ARMS.index(arm)
    return derive_seed(master, 7, index, iteration)


def _read_tokens(path: Path) -> List[List[int]]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [[int(tok) for tok in line.split()] for line in lines if line]


def _write_tokens(sequences: Sequence[Sequence[int]], path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for seq in sequences:
            fh.write(" ".join(str(i) for i in seq) + "\n")


def _read_labels_csv(path: Path) -> Dict[str, Optional[int]]:
    out: Dict[str, Optional[int]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            raw = row["label"].strip()
            out[row["exam_id"]] = int(raw) if raw else None
    return out


def write_preds_csv(
    path: Path, exam_ids: Sequence[str], probs: np.ndarray, preds: Sequence[int]
) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["exam_id", "p1", "p2", "p3", "p4", "p5", "predicted"])
        for exam_id, row, pred in zip(exam_ids, probs, preds):
            writer.writerow([exam_id] + [_fmt(float(p)) for p in row] + [int(pred)])


def read_preds_csv(path: Path) -> List[Tuple[str, List[float], int]]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            probs = [float(row[f"p{i}"]) for i in range(1, 6)]
            rows.append((row["exam_id"], probs, int(row["predicted"])))
    return rows


def _write_train_log(path: Path, result: TrainResult) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "train_loss", "val_loss", "val_acc"])
        for stats in result.history:
            writer.writerow(
                [stats.epoch + 1, _fmt(stats.train_loss), _fmt(stats.val_loss), _fmt(stats.val_accuracy)]
            )


def save_model_bundle(
    bundle_dir: Path,
    arm: str,
    result: TrainResult,
    head: ClassificationHead,
    model_info: Dict,
    text_encoder=None,
    text_vocab: Optional[SubwordVocab] = None,
    encoder_base_stage: Optional[str] = None,
    vision_encoder=None,
    grammar_path: Optional[Path] = None,
) -> List[Path]:
    """Write a trained model directory; returns the files written."""
    bundle = Path(bundle_dir)
    bundle.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []

    blob, order, shapes = _state_to_blob(head.state_dict())
    (bundle / "head.bin").write_bytes(blob)
    written.append(bundle / "head.bin")
    model_info = dict(model_info)
    model_info["format"] = "deauville-model/1"
    model_info["arm"] = arm
    if text_encoder is not None and vision_encoder is not None:
        model_info["modality"] = "multimodal"
    elif vision_encoder is not None:
        model_info["modality"] = "vision"
    else:
        model_info["modality"] = "text"
    model_info["head"] = {"param_order": order, "shapes": shapes}
    model_info["head_spec"] = asdict(head.spec)

    if text_encoder is not None:
        save_checkpoint(
            bundle / "encoder",
            text_encoder,
            text_vocab,
            "fine-tuned",
            parent_stage=encoder_base_stage,
        )
        written += [
            bundle / "encoder" / name
            for name in ("spec.json", "weights.bin", "vocab.txt", "provenance.json")
        ]
        model_info["encoder_dir"] = "encoder"
    if vision_encoder is not None:
        vblob, vorder, vshapes = _state_to_blob(vision_encoder.state_dict())
        (bundle / "vision.bin").write_bytes(vblob)
        written.append(bundle / "vision.bin")
        model_info["vision"] = {"param_order": vorder, "shapes": vshapes}
    if grammar_path is not None:
        (bundle / "grammar.txt").write_bytes(Path(grammar_path).read_bytes())
        written.append(bundle / "grammar.txt")

    _write_json(bundle / "model.json", model_info)
    written.append(bundle / "model.json")
    _write_train_log(bundle / "train_log.csv", result)
    written.append(bundle / "train_log.csv")
    return written


# Per-process cache of heavyweight fold inputs, so a worker that handles
# several folds loads the corpus and token files once.
_CTX_CACHE: Dict[str, Dict] = {}


def _load_fold_context(paths: Dict[str, str]) -> Dict:
    key = json.dumps(paths, sort_keys=True)
    if key in _CTX_CACHE:
        return _CTX_CACHE[key]
    ctx: Dict = {}
    tokens = _read_tokens(Path(paths["tokens"]))
    sidecar = _read_json(Path(paths["sections"]))
    ctx["sequences"] = dict(zip(sidecar["exam_ids"], tokens))
    ctx["labels"] = {
        k: v for k, v in _read_labels_csv(Path(paths["labels"])).items() if v is not None
    }
    vocab = load_vocab(Path(paths["vocab"]))
    ctx["pad_id"] = vocab.pad_id
    if paths.get("corpus"):
        exams, _ = load_corpus(Path(paths["corpus"]), with_images=True)
        ctx["images"] = {
            e.exam_id: e.image.pixels for e in exams if e.image is not None
        }
    _CTX_CACHE.clear()
    _CTX_CACHE[key] = ctx
    return ctx


def run_fold_job(payload: Dict, context: Optional[Dict] = None) -> Dict:
    """Train one (arm, fold) pair and write its bundle and predictions.

    Self-contained on purpose: with no ``context`` it loads everything it
    needs from the artifact files named in the payload, which lets the
    same function run inline or in a worker process.
    """
    torch.set_num_threads(1)
    arm = payload["arm"]
    iteration = payload["iteration"]
    seed = payload["seed"]
    ctx = context if context is not None else _load_fold_context(payload["context_paths"])
    labels = ctx["labels"]
    sequences = ctx["sequences"]
    pad_id = ctx["pad_id"]

    def seqs(ids):
        return [sequences[i] for i in ids]

    def labs(ids):
        return [labels[i] for i in ids]

    def imgs(ids):
        return [ctx["images"][i] for i in ids]

    train_ids = payload["train_ids"]
    val_ids = payload["val_ids"]
    test_ids = payload["test_ids"]
    cfg = TrainConfig(**payload["train_config"])
    cfg = replace(cfg, seed=seed)
    bundle_dir = Path(payload["bundle_dir"])
    grammar_path = Path(payload["grammar_path"])
    info = {
        "model_name": arm,
        "fold": iteration,
        "seed": seed,
        "input_limit": payload["input_limit"],
        "normalization": payload["normalization"],
        "train_config": asdict(cfg),
    }

    modality = "text" if arm in _TEXT_ARMS or arm == "text" else arm
    if modality == "text":
        encoder, vocab, meta = load_checkpoint(Path(payload["encoder_checkpoint"]))
        torch.manual_seed(seed)
        head = ClassificationHead(HeadSpec(input_dim=encoder.cfg.hidden_size))
        model = TextClassifier(encoder, head)
        result = train_classifier(
            model,
            TextDataset(seqs(train_ids), labs(train_ids), pad_id),
            TextDataset(seqs(val_ids), labs(val_ids), pad_id),
            cfg,
        )
        files = save_model_bundle(
            bundle_dir, arm, result, head, info,
            text_encoder=encoder, text_vocab=vocab,
            encoder_base_stage=meta["stage"], grammar_path=grammar_path,
        )
    elif modality == "vision":
        spec = VisionSpec(**_vision_spec_kwargs(payload["vision_spec"]))
        torch.manual_seed(seed)
        encoder = build_vision_encoder(spec)
        head = ClassificationHead(HeadSpec(input_dim=encoder.d_out))
        model = VisionClassifier(encoder, head)
        result = train_classifier(
            model,
            VisionDataset(imgs(train_ids), labs(train_ids)),
            VisionDataset(imgs(val_ids), labs(val_ids)),
            cfg,
        )
        info["vision_spec"] = payload["vision_spec"]
        files = save_model_bundle(
            bundle_dir, arm, result, head, info, vision_encoder=encoder
        )
    elif modality == "multimodal":
        encoder, vocab, meta = load_checkpoint(Path(payload["encoder_checkpoint"]))
        spec = VisionSpec(**_vision_spec_kwargs(payload["vision_spec"]))
        torch.manual_seed(seed)
        vision_encoder = build_vision_encoder(spec)
        head = ClassificationHead(
            HeadSpec(input_dim=encoder.cfg.hidden_size + vision_encoder.d_out)
        )
        model = MultimodalClassifier(encoder, vision_encoder, head)
        result = train_classifier(
            model,
            MultimodalDataset(seqs(train_ids), imgs(train_ids), labs(train_ids), pad_id),
            MultimodalDataset(seqs(val_ids), imgs(val_ids), labs(val_ids), pad_id),
            cfg,
        )
        info["vision_spec"] = payload["vision_spec"]
        files = save_model_bundle(
            bundle_dir, arm, result, head, info,
            text_encoder=encoder, text_vocab=vocab,
            encoder_base_stage=meta["stage"], grammar_path=grammar_path,
            vision_encoder=vision_encoder,
        )
    else:
        raise ValidationError(f"unknown arm {arm!r}")

    if test_ids:
        if modality == "text":
            preds, probs = predict_text(model, seqs(test_ids), pad_id)
        elif modality == "vision":
            preds, probs = predict_vision(model, imgs(test_ids))
        else:
            preds, probs = predict_multimodal(
                model, seqs(test_ids), imgs(test_ids), pad_id
            )
        preds_path = Path(payload["preds_path"])
        write_preds_csv(preds_path, test_ids, probs, preds)
        files.append(preds_path)
    return {
        "arm": arm,
        "iteration": iteration,
        "files": [str(p) for p in files],
        "best_epoch": result.best_epoch,
        "epochs_run": len(result.history),
        "stopped_early": result.stopped_early,
        "best_val_loss": result.best_val_loss,
    }


def _vision_spec_kwargs(raw: Dict) -> Dict:
    data = dict(raw)
    if "input_size" in data:
        data["input_size"] = tuple(data["input_size"])
    return data


class _Runner:
    def __init__(self, config: ExperimentConfig, out_dir: Path, manifest: RunManifest):
        self.cfg = config
        self.out = Path(out_dir)
        self.man = manifest
        self._cache: Dict = {}

    # --- shared accessors -------------------------------------------------

    def corpus_dir(self) -> Path:
        if self.cfg.corpus.path is not None:
            return Path(self.cfg.corpus.path)
        return self.out / "corpus"

    def needs_images(self) -> bool:
        return bool(set(self.cfg.arms) & {"vision", "multimodal"})

    def exams(self):
        if "exams" not in self._cache:
            records, _ = load_corpus(self.corpus_dir(), with_images=self.needs_images())
            self._cache["exams"] = records
        return self._cache["exams"]

    def grammar(self):
        if "grammar" not in self._cache:
            self._cache["grammar"] = load_grammar(self.cfg.resolve_grammar_path())
        return self._cache["grammar"]

    def vocab(self) -> SubwordVocab:
        if "vocab" not in self._cache:
            self._cache["vocab"] = load_vocab(self.out / "preprocess" / "vocab.txt")
        return self._cache["vocab"]

    def labels(self) -> Dict[str, int]:
        if "labels" not in self._cache:
            raw = _read_labels_csv(self.out / "extract" / "labels.csv")
            self._cache["labels"] = {k: v for k, v in raw.items() if v is not None}
        return self._cache["labels"]

    def domain_sequences(self) -> Dict[str, List[int]]:
        if "domain_sequences" not in self._cache:
            tokens = _read_tokens(self.out / "preprocess" / "domain.tokens")
            sidecar = _read_json(self.out / "preprocess" / "domain.sections.json")
            self._cache["domain_sequences"] = dict(zip(sidecar["exam_ids"], tokens))
        return self._cache["domain_sequences"]

    def split_plans(self):
        data = _read_json(self.out / "splits.json")
        plans = []
        for entry in data["plans"]:
            plans.append(
                (
                    entry["iteration"],
                    entry["train_ids"],
                    entry["val_ids"],
                    entry["test_ids"],
                )
            )
        return plans

    # --- stages -----------------------------------------------------------

    def stage_corpus(self) -> Tuple[List[Path], Dict]:
        if self.cfg.corpus.path is not None:
            corpus_dir = Path(self.cfg.corpus.path)
            manifest = load_manifest(corpus_dir)
            meta = {
                "source": "external",
                "path": str(corpus_dir),
                "n_exams": len(manifest["exams"]),
                "manifest_sha256": _sha256_file(corpus_dir / "manifest.json"),
            }
            return [], meta
        spec = self.cfg.corpus.to_corpus_spec()
        records = generate_corpus(spec)
        save_corpus(records, self.out / "corpus", spec=spec)
        self._cache["exams"] = records
        stats = corpus_stats(records)
        meta = {
            "source": "generated",
            "n_exams": stats["n_exams"],
            "n_labeled": stats["n_labeled"],
            "n_unlabeled": stats["n_unlabeled"],
            "class_counts": {str(k): v for k, v in stats["class_counts"].items()},
        }
        return [self.out / "corpus" / "manifest.json"], meta

    def stage_extract(self) -> Tuple[List[Path], Dict]:
        grammar = self.grammar()
        records = sorted(self.exams(), key=lambda e: e.exam_id)
        out_dir = self.out / "extract"
        out_dir.mkdir(parents=True, exist_ok=True)
        redacted = {}
        n_included = 0
        with open(out_dir / "labels.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["exam_id", "label", "n_mentions"])
            for exam in records:
                label = label_report(exam.report, grammar)
                n_mentions = sum(
                    len(find_mentions(getattr(exam.report, section), grammar))
                    for section in ("indication", "findings", "impression")
                )
                if label is not None:
                    n_included += 1
                writer.writerow([exam.exam_id, "" if label is None else label, n_mentions])
                red = redact_report(exam.report, grammar)
                redacted[exam.exam_id] = {
                    "indication": red.indication,
                    "findings": red.findings,
                    "impression": red.impression,
                }
        _write_json(out_dir / "redacted.json", redacted)
        manifest_labeled = sum(1 for e in records if e.label is not None)
        meta = {
            "n_exams": len(records),
            "n_included": n_included,
            "n_excluded": len(records) - n_included,
            "corpus_manifest_labeled": manifest_labeled,
            "grammar_sha256": _sha256_file(self.cfg.resolve_grammar_path()),
        }
        self._cache.pop("labels", None)
        return [out_dir / "labels.csv", out_dir / "redacted.json"], meta

    def stage_preprocess(self) -> Tuple[List[Path], Dict]:
        cfg = self.cfg
        out_dir = self.out / "preprocess"
        out_dir.mkdir(parents=True, exist_ok=True)
        norm = cfg.normalization

        generic_raw = generate_generic_texts(cfg.vocab.generic_texts, cfg.vocab.generic_seed)
        generic_norm = [normalize(t, norm) for t in generic_raw]
        vocab = train_subword_vocab(
            generic_norm, cfg.vocab.size, min_pair_frequency=cfg.vocab.min_pair_frequency
        )
        save_vocab(vocab, out_dir / "vocab.txt")
        self._cache["vocab"] = vocab

        generic_seqs = [
            build_input(ReportDocument("", "", text), vocab, limit=cfg.input_limit).ids
            for text in generic_norm
        ]
        _write_tokens(generic_seqs, out_dir / "generic.tokens")

        redacted = _read_json(self.out / "extract" / "redacted.json")
        exam_ids = sorted(redacted)
        domain_seqs = []
        section_maps = []
        for exam_id in exam_ids:
            sections = redacted[exam_id]
            report = ReportDocument(
                indication=normalize(sections["indication"], norm),
                findings=normalize(sections["findings"], norm),
                impression=normalize(sections["impression"], norm),
            )
            seq = build_input(report, vocab, limit=cfg.input_limit)
            domain_seqs.append(seq.ids)
            section_maps.append({k: list(v) for k, v in seq.section_map.items()})
        _write_tokens(domain_seqs, out_dir / "domain.tokens")
        _write_json(
            out_dir / "domain.sections.json",
            {"limit": cfg.input_limit, "exam_ids": exam_ids, "section_maps": section_maps},
        )
        self._cache["domain_sequences"] = dict(zip(exam_ids, domain_seqs))
        meta = {
            "vocab_size": len(vocab),
            "n_generic": len(generic_seqs),
            "n_domain": len(domain_seqs),
            "input_limit": cfg.input_limit,
        }
        return [
            out_dir / "vocab.txt",
            out_dir / "generic.tokens",
            out_dir / "domain.tokens",
            out_dir / "domain.sections.json",
        ], meta

    def stage_encoders(self) -> Tuple[List[Path], Dict]:
        cfg = self.cfg
        out_dir = self.out / "encoders"
        vocab = self.vocab()
        generic_seqs = _read_tokens(self.out / "preprocess" / "generic.tokens")
        domain = self.domain_sequences()
        domain_seqs = [domain[i] for i in sorted(domain)]

        enc_spec = EncoderSpec(vocab_size=len(vocab), **asdict(cfg.encoder))
        torch.manual_seed(derive_seed(cfg.seed, 6))
        model = TransformerEncoder(enc_spec)
        hist_generic = generic_pretrain(
            model, generic_seqs, vocab.pad_id, vocab.special_ids, vocab.mask_id, cfg.pretrain
        )
        save_checkpoint(
            out_dir / "generic",
            model,
            vocab,
            "generic-pretrained",
            parent_stage="random-init",
            history=hist_generic,
            lineage=["random-init", "generic-pretrained"],
        )

        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence((cfg.seed, 4242)))
        )
        perm = rng.permutation(len(domain_seqs))
        n_holdout = max(1, int(round(cfg.adapt.holdout_fraction * len(domain_seqs))))
        holdout = [domain_seqs[int(i)] for i in perm[:n_holdout]]
        adapt_train = [domain_seqs[int(i)] for i in perm[n_holdout:]]
        ppl_seed = derive_seed(cfg.seed, 4)
        ppl_before = masked_token_perplexity(
            model, holdout, vocab.pad_id, vocab.special_ids, vocab.mask_id, seed=ppl_seed
        )

        adapted, _, _ = load_checkpoint(out_dir / "generic")
        hist_adapt = domain_adapt(
            adapted, adapt_train, vocab.pad_id, vocab.special_ids, vocab.mask_id, cfg.adapt.mlm
        )
        ppl_after = masked_token_perplexity(
            adapted, holdout, vocab.pad_id, vocab.special_ids, vocab.mask_id, seed=ppl_seed
        )
        save_checkpoint(
            out_dir / "adapted",
            adapted,
            vocab,
            "domain-adapted",
            parent_stage="generic-pretrained",
            history=hist_adapt,
            lineage=["random-init", "generic-pretrained", "domain-adapted"],
        )
        metrics = {
            "ppl_before": ppl_before,
            "ppl_after": ppl_after,
            "drop": (ppl_before - ppl_after) / ppl_before,
            "n_holdout": len(holdout),
            "n_adapt_train": len(adapt_train),
        }
        _write_json(out_dir / "adaptation_metrics.json", metrics)
        ckpt_files = ("spec.json", "weights.bin", "vocab.txt", "provenance.json")
        artifacts = [out_dir / "adaptation_metrics.json"]
        artifacts += [out_dir / "generic" / f for f in ckpt_files]
        artifacts += [out_dir / "adapted" / f for f in ckpt_files]
        return artifacts, metrics

    def stage_train(self) -> Tuple[List[Path], Dict]:
        cfg = self.cfg
        labels = self.labels()
        labeled_ids = sorted(labels)
        plans = make_splits(
            labeled_ids,
            n_iterations=cfg.evaluation.n_iterations,
            fractions=cfg.evaluation.fractions,
            seed=cfg.seed,
            stratify_labels=labels if cfg.evaluation.stratified else None,
        )
        _write_json(
            self.out / "splits.json",
            {
                "seed": cfg.seed,
                "fractions": list(cfg.evaluation.fractions),
                "plans": [
                    {
                        "iteration": p.iteration,
                        "train_ids": list(p.train_ids),
                        "val_ids": list(p.val_ids),
                        "test_ids": list(p.test_ids),
                    }
                    for p in plans
                ],
            },
        )
        context_paths = {
            "tokens": str(self.out / "preprocess" / "domain.tokens"),
            "sections": str(self.out / "preprocess" / "domain.sections.json"),
            "labels": str(self.out / "extract" / "labels.csv"),
            "vocab": str(self.out / "preprocess" / "vocab.txt"),
            "corpus": str(self.corpus_dir()) if self.needs_images() else "",
        }
        payloads = []
        for arm in cfg.arms:
            ckpt = None
            if arm == "text-generic":
                ckpt = self.out / "encoders" / "generic"
            elif arm in ("text-da", "multimodal"):
                ckpt = self.out / "encoders" / "adapted"
            for plan in plans:
                payloads.append(
                    {
                        "arm": arm,
                        "iteration": plan.iteration,
                        "seed": _arm_seed(cfg.seed, arm, plan.iteration),
                        "train_ids": list(plan.train_ids),
                        "val_ids": list(plan.val_ids),
                        "test_ids": list(plan.test_ids),
                        "train_config": asdict(cfg.train_config_for(arm)),
                        "vision_spec": asdict(cfg.vision),
                        "input_limit": cfg.input_limit,
                        "normalization": asdict(cfg.normalization),
                        "encoder_checkpoint": str(ckpt) if ckpt else "",
                        "grammar_path": str(cfg.resolve_grammar_path()),
                        "bundle_dir": str(self.out / "models" / arm / f"fold_{plan.iteration}"),
                        "preds_path": str(self.out / "preds" / f"{arm}_fold_{plan.iteration}.csv"),
                        "context_paths": context_paths,
                    }
                )

        results = []
        if cfg.workers == 1:
            context = _load_fold_context(context_paths)
            for payload in payloads:
                results.append(run_fold_job(payload, context))
        else:
            with ProcessPoolExecutor(
                max_workers=cfg.workers, mp_context=get_context("spawn")
            ) as pool:
                futures = [pool.submit(run_fold_job, p) for p in payloads]
                results = [f.result() for f in futures]

        artifacts = [self.out / "splits.json"]
        for res in results:
            artifacts.extend(Path(p) for p in res["files"])
        meta = {
            "n_jobs": len(payloads),
            "folds": {
                f"{r['arm']}/fold_{r['iteration']}": {
                    "best_epoch": r["best_epoch"],
                    "epochs_run": r["epochs_run"],
                    "stopped_early": r["stopped_early"],
                }
                for r in results
            },
        }
        return artifacts, meta

    def _fold_results(self) -> Dict[str, List[FoldResult]]:
        if "fold_results" in self._cache:
            return self._cache["fold_results"]
        labels = self.labels()
        plans = self.split_plans()
        by_arm: Dict[str, List[FoldResult]] = {}
        for arm in self.cfg.arms:
            folds = []
            for iteration, _train, _val, test_ids in plans:
                rows = read_preds_csv(self.out / "preds" / f"{arm}_fold_{iteration}.csv")
                got_ids = [r[0] for r in rows]
                if set(got_ids) != set(test_ids):
                    raise UnrecoverableStateError(
                        f"predictions for {arm} fold {iteration} do not cover the test set"
                    )
                truths = [labels[i] for i in got_ids]
                preds = [r[2] for r in rows]
                folds.append(
                    fold_result(
                        iteration, got_ids, truths, preds,
                        weighting=self.cfg.evaluation.weighting,
                    )
                )
            by_arm[arm] = folds
        self._cache["fold_results"] = by_arm
        return by_arm

    def stage_evaluate(self) -> Tuple[List[Path], Dict]:
        out_dir = self.out / "eval"
        out_dir.mkdir(parents=True, exist_ok=True)
        by_arm = self._fold_results()
        artifacts = []
        summary = {}
        for arm, folds in by_arm.items():
            rows = []
            for fr in folds:
                conf_path = out_dir / confusion_filename(arm, fr.iteration)
                write_confusion_csv(fr.confusion, conf_path)
                artifacts.append(conf_path)
                rows.append(
                    {
                        "iteration": fr.iteration,
                        "n_test": len(fr.truths),
                        "accuracy": fr.accuracy,
                        "kappa_linear": fr.kappa("linear"),
                        "kappa_quadratic": fr.kappa("quadratic"),
                    }
                )
            summary[arm] = rows
        _write_json(out_dir / "fold_results.json", summary)
        artifacts.append(out_dir / "fold_results.json")

        meta: Dict = {"arms": {a: {"folds": len(fs)} for a, fs in by_arm.items()}}
        if "text-da" in by_arm and "text-generic" in by_arm:
            wins = sum(
                1
                for da, ge in zip(by_arm["text-da"], by_arm["text-generic"])
                if da.accuracy > ge.accuracy
            )
            meta["da_fold_wins"] = wins
        return artifacts, meta

    def stage_report(self) -> Tuple[List[Path], Dict]:
        out_dir = self.out / "eval"
        out_dir.mkdir(parents=True, exist_ok=True)
        by_arm = self._fold_results()
        summaries = []
        for arm in sorted(by_arm):
            for weighting in ("linear", "quadratic"):
                summaries.append(aggregate(by_arm[arm], arm, weighting))
        write_results_csv(summaries, out_dir / "results.csv")
        chart_path = out_dir / "accuracy_chart.svg"
        render_accuracy_chart(
            [s for s in summaries if s.weighting == "linear"], chart_path
        )

        labels = self.labels()
        expert_cfg = self.cfg.evaluation.expert
        review = simulate_expert_review(
            labels,
            n_cases=expert_cfg.n_cases,
            agreement_rate=expert_cfg.agreement_rate,
            seed=expert_cfg.seed,
        )
        expert_path = out_dir / "expert.csv"
        write_expert_csv(list(zip(review.exam_ids, review.y_pred)), expert_path)
        comparison = compare_expert(expert_path, labels)
        _write_json(
            out_dir / "expert_report.json",
            {
                "n_cases": comparison.n_cases,
                "accuracy": comparison.accuracy,
                "kappa_linear": comparison.kappa_linear,
                "kappa_quadratic": comparison.kappa_quadratic,
            },
        )
        meta = {
            arm: {
                "acc_mean": s.acc_mean,
                "acc_sd": s.acc_sd,
                "kappa_mean": s.kappa_mean,
            }
            for arm, s in ((s.model_name, s) for s in summaries if s.weighting == "linear")
        }
        meta["expert_accuracy"] = comparison.accuracy
        return [
            out_dir / "results.csv",
            chart_path,
            expert_path,
            out_dir / "expert_report.json",
        ], meta

    # --- driver -----------------------------------------------------------

    def run(self, verify_completed: bool = False) -> None:
        torch.set_num_threads(1)
        stage_fns = {
            "corpus": self.stage_corpus,
            "extract": self.stage_extract,
            "preprocess": self.stage_preprocess,
            "encoders": self.stage_encoders,
            "train": self.stage_train,
            "evaluate": self.stage_evaluate,
            "report": self.stage_report,
        }
        for name in STAGE_ORDER:
            if self.man.stage_complete(name):
                if verify_completed:
                    self.man.verify_stage(name)
                continue
            try:
                artifacts, meta = stage_fns[name]()
            except DeauvilleError as e:
                self.man.record_failure(name, e)
                raise type(e)(f"stage {name!r} failed: {e}") from e
            except Exception as e:
                self.man.record_failure(name, e)
                raise
            self.man.record_stage(name, artifacts, meta)


def run_experiment(config_source, out_dir: Path) -> Path:
    """Run every stage of an experiment into ``out_dir``; returns it.

    If the directory already holds a manifest for the same config, the
    run continues from the first incomplete stage; a manifest for a
    different config is an error.
    """
    config = config_from_mapping_or_yaml(config_source)
    out = Path(out_dir)
    if (out / "manifest.json").exists():
        manifest = RunManifest.load(out)
        if manifest.data["config_hash"] != config.config_hash():
            raise ValidationError(
                f"{out} already holds a run with a different config; "
                "pick a fresh output directory"
            )
    else:
        config.validate_paths()
        out.mkdir(parents=True, exist_ok=True)
        manifest = RunManifest.new(out, config)
    _Runner(config, out, manifest).run()
    return out


def resume(out_dir: Path) -> Path:
    """Continue an interrupted run from its manifest.

    Completed stages are verified by checksum and skipped; a corrupted
    manifest or artifact raises UnrecoverableStateError.  Resuming a
    finished run is a no-op.
    """
    out = Path(out_dir)
    manifest = RunManifest.load(out)
    config = ExperimentConfig.from_dict(manifest.data["config"])
    runner = _Runner(config, out, manifest)
    runner.run(verify_completed=True)
    return out
