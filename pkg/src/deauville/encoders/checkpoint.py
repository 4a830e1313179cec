"""Encoder checkpoint directory format.

A checkpoint is a directory holding ``spec.json`` (architecture, stage,
parameter layout), ``weights.bin`` (all parameters as little-endian
float32 in spec order), ``vocab.txt``, and ``provenance.json`` (stage
lineage and content checksums).  Stages are ordered random-init ->
generic-pretrained -> domain-adapted -> fine-tuned; a save may only move
rightward (skipping stages is fine, going back is not), and loading can
pin an expected stage.
"""

import hashlib
import json
from dataclasses import asdict
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch

from ..errors import UnrecoverableStateError, ValidationError
from ..preprocess.bpe import SubwordVocab, load_vocab, save_vocab
from .model import EncoderSpec, TransformerEncoder

STAGES = ("random-init", "generic-pretrained", "domain-adapted", "fine-tuned")

_FORMAT = "deauville-encoder/1"


def _allowed(parent: Optional[str], stage: str) -> bool:
    if stage not in STAGES:
        return False
    if parent is None:
        return True
    if parent not in STAGES:
        return False
    return STAGES.index(stage) > STAGES.index(parent)


def require_stage_in(stage: str, allowed: Sequence[str], context: str) -> None:
    if stage not in allowed:
        raise ValidationError(
            f"{context} requires a checkpoint at stage {' or '.join(allowed)}, got {stage!r}"
        )


def save_checkpoint(
    out_dir: Path,
    model: TransformerEncoder,
    vocab: SubwordVocab,
    stage: str,
    parent_stage: Optional[str] = None,
    history: Optional[List[Dict]] = None,
    lineage: Optional[List[str]] = None,
) -> Path:
    """Persist a model at a named stage; returns the directory path.

    ``parent_stage`` is the stage the weights came from; the transition
    must move rightward in the stage order (``None`` starts a lineage).
    """
    if not _allowed(parent_stage, stage):
        raise ValidationError(
            f"illegal stage transition {parent_stage!r} -> {stage!r}; "
            f"stages advance {' -> '.join(STAGES)}"
        )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    state = model.state_dict()
    param_order = sorted(state)
    blobs = []
    shapes = {}
    for name in param_order:
        tensor = state[name].detach().cpu().to(torch.float32)
        shapes[name] = list(tensor.shape)
        blobs.append(tensor.numpy().astype("<f4").tobytes())
    weights = b"".join(blobs)
    (out / "weights.bin").write_bytes(weights)
    save_vocab(vocab, out / "vocab.txt")

    spec = {
        "format": _FORMAT,
        "stage": stage,
        "config": asdict(model.cfg),
        "param_order": param_order,
        "param_shapes": shapes,
        "weights_file": "weights.bin",
        "vocab_file": "vocab.txt",
    }
    (out / "spec.json").write_text(
        json.dumps(spec, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    provenance = {
        "stage": stage,
        "lineage": list(lineage) if lineage is not None else (
            ([] if parent_stage is None else [parent_stage]) + [stage]
        ),
        "sha256_weights": hashlib.sha256(weights).hexdigest(),
        "sha256_vocab": hashlib.sha256((out / "vocab.txt").read_bytes()).hexdigest(),
        "history": history or [],
    }
    (out / "provenance.json").write_text(
        json.dumps(provenance, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return out


def load_checkpoint(
    ckpt_dir: Path, expect_stage: Optional[str] = None
) -> Tuple[TransformerEncoder, SubwordVocab, Dict]:
    """Load a checkpoint; verifies checksums and optional stage pin."""
    ckpt = Path(ckpt_dir)
    spec_path = ckpt / "spec.json"
    if not spec_path.exists():
        raise ValidationError(f"no spec.json under {ckpt}")
    spec = json.loads(spec_path.read_text(encoding="utf-8"))
    if spec.get("format") != _FORMAT:
        raise ValidationError(f"{spec_path}: unrecognized checkpoint format")
    stage = spec["stage"]
    if stage not in STAGES:
        raise ValidationError(f"{spec_path}: unknown stage {stage!r}")
    if expect_stage is not None and stage != expect_stage:
        raise UnrecoverableStateError(
            f"checkpoint at {ckpt} is stage {stage!r}, expected {expect_stage!r}"
        )

    weights = (ckpt / spec["weights_file"]).read_bytes()
    provenance = json.loads((ckpt / "provenance.json").read_text(encoding="utf-8"))
    digest = hashlib.sha256(weights).hexdigest()
    if digest != provenance["sha256_weights"]:
        raise UnrecoverableStateError(
            f"weights checksum mismatch under {ckpt}; refusing to load"
        )

    cfg = EncoderSpec(**spec["config"])
    model = TransformerEncoder(cfg)
    state = {}
    offset = 0
    for name in spec["param_order"]:
        shape = spec["param_shapes"][name]
        count = int(np.prod(shape)) if shape else 1
        raw = weights[offset : offset + 4 * count]
        if len(raw) != 4 * count:
            raise UnrecoverableStateError(f"weights.bin truncated at {name}")
        offset += 4 * count
        arr = np.frombuffer(raw, dtype="<f4").reshape(shape).copy()
        state[name] = torch.from_numpy(arr)
    if offset != len(weights):
        raise UnrecoverableStateError("weights.bin holds trailing bytes")
    missing = set(model.state_dict()) - set(state)
    if missing:
        raise UnrecoverableStateError(f"checkpoint missing parameters: {sorted(missing)}")
    model.load_state_dict(state)
    model.eval()
    vocab = load_vocab(ckpt / spec["vocab_file"])
    if len(vocab) != cfg.vocab_size:
        raise ValidationError(
            f"vocab size {len(vocab)} does not match encoder config {cfg.vocab_size}"
        )
    return model, vocab, {"stage": stage, "spec": spec, "provenance": provenance}
