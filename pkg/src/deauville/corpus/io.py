"""On-disk corpus layout.

A corpus directory holds one ``manifest.json``, one ``<exam_id>.report.json``
per exam, and optionally one 16-bit binary PGM per exam.  The manifest
records the generating spec, per-exam metadata, and a sha256 checksum for
every file so downstream stages can verify integrity.
"""

import hashlib
import json
import re
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..errors import ValidationError
from .records import CorpusSpec, ExamRecord, GrayscaleImage, ReportDocument

_PGM_MAXVAL = 65535


def save_pgm(image: GrayscaleImage, path: Path) -> None:
    """Write a [0,1] float image as binary PGM with 16-bit samples."""
    px = np.round(image.pixels * _PGM_MAXVAL).astype(">u2")
    header = f"P5\n{image.width} {image.height}\n{_PGM_MAXVAL}\n".encode("ascii")
    Path(path).write_bytes(header + px.tobytes())


def load_pgm(path: Path) -> GrayscaleImage:
    data = Path(path).read_bytes()
    m = re.match(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s", data)
    if not m:
        raise ValidationError(f"{path}: not a binary PGM file")
    width, height, maxval = (int(g) for g in m.groups())
    if maxval != _PGM_MAXVAL:
        raise ValidationError(f"{path}: expected 16-bit PGM, maxval {maxval}")
    offset = m.end()
    expected = width * height * 2
    raw = data[offset : offset + expected]
    if len(raw) != expected:
        raise ValidationError(f"{path}: truncated pixel data")
    px = np.frombuffer(raw, dtype=">u2").reshape(height, width)
    return GrayscaleImage(pixels=px.astype(np.float64) / _PGM_MAXVAL)


def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _spec_to_dict(spec: CorpusSpec) -> Dict:
    return {
        "n_exams": spec.n_exams,
        "seed": spec.seed,
        "class_weights": {str(k): v for k, v in sorted(spec.class_weights.items())},
        "mention_style_mix": spec.mention_style_mix,
        "unlabeled_fraction": spec.unlabeled_fraction,
        "n_dictators": spec.n_dictators,
        "image_size": list(spec.image_size),
        "with_images": spec.with_images,
    }


def _spec_from_dict(d: Dict) -> CorpusSpec:
    return CorpusSpec(
        n_exams=int(d["n_exams"]),
        seed=int(d["seed"]),
        class_weights={int(k): float(v) for k, v in d["class_weights"].items()},
        mention_style_mix=d.get("mention_style_mix"),
        unlabeled_fraction=float(d.get("unlabeled_fraction", 0.0)),
        n_dictators=int(d.get("n_dictators", 44)),
        image_size=tuple(d.get("image_size", (64, 64))),
        with_images=bool(d.get("with_images", True)),
    )


def save_corpus(
    records: List[ExamRecord],
    out_dir: Path,
    spec: Optional[CorpusSpec] = None,
    metadata: Optional[List[Dict]] = None,
) -> Path:
    """Write records (and optional planting metadata) to a directory.

    Returns the manifest path.  Files are written with sorted JSON keys so
    repeated saves of the same corpus are byte-identical.
    """
    if not records:
        raise ValidationError("cannot save an empty corpus")
    if metadata is not None and len(metadata) != len(records):
        raise ValidationError("metadata length must match records")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    entries = []
    for i, rec in enumerate(records):
        report_name = f"{rec.exam_id}.report.json"
        report_payload = {
            "indication": rec.report.indication,
            "findings": rec.report.findings,
            "impression": rec.report.impression,
            "label": rec.label,
            "dictator_id": rec.dictator_id,
            "exam_date": rec.exam_date,
        }
        report_path = out / report_name
        report_path.write_text(
            json.dumps(report_payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        entry = {
            "exam_id": rec.exam_id,
            "label": rec.label,
            "dictator_id": rec.dictator_id,
            "exam_date": rec.exam_date,
            "report": report_name,
            "sha256_report": _sha256(report_path),
            "image": None,
            "sha256_image": None,
        }
        if rec.image is not None:
            image_name = f"{rec.exam_id}.pgm"
            save_pgm(rec.image, out / image_name)
            entry["image"] = image_name
            entry["sha256_image"] = _sha256(out / image_name)
        if metadata is not None:
            entry["planted_mentions"] = metadata[i].get("planted_mentions", [])
            entry["hidden_class"] = metadata[i].get("hidden_class")
        entries.append(entry)

    manifest = {
        "format": "deauville-corpus/1",
        "n_exams": len(records),
        "spec": _spec_to_dict(spec) if spec is not None else None,
        "exams": entries,
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return manifest_path


def load_manifest(corpus_dir: Path) -> Dict:
    path = Path(corpus_dir) / "manifest.json"
    if not path.exists():
        raise ValidationError(f"no manifest.json under {corpus_dir}")
    manifest = json.loads(path.read_text(encoding="utf-8"))
    if manifest.get("format") != "deauville-corpus/1":
        raise ValidationError(f"{path}: unrecognized corpus format")
    return manifest


def load_corpus(
    corpus_dir: Path,
    verify_checksums: bool = True,
    with_images: bool = True,
) -> Tuple[List[ExamRecord], Optional[CorpusSpec]]:
    """Load a saved corpus; checksum mismatches raise ValidationError."""
    corpus_dir = Path(corpus_dir)
    manifest = load_manifest(corpus_dir)
    records = []
    for entry in manifest["exams"]:
        report_path = corpus_dir / entry["report"]
        if verify_checksums and _sha256(report_path) != entry["sha256_report"]:
            raise ValidationError(f"checksum mismatch for {report_path.name}")
        payload = json.loads(report_path.read_text(encoding="utf-8"))
        image = None
        if with_images and entry.get("image"):
            image_path = corpus_dir / entry["image"]
            if verify_checksums and _sha256(image_path) != entry["sha256_image"]:
                raise ValidationError(f"checksum mismatch for {image_path.name}")
            image = load_pgm(image_path)
        records.append(
            ExamRecord(
                exam_id=entry["exam_id"],
                report=ReportDocument(
                    indication=payload["indication"],
                    findings=payload["findings"],
                    impression=payload["impression"],
                ),
                label=payload["label"],
                dictator_id=payload["dictator_id"],
                exam_date=payload["exam_date"],
                image=image,
            )
        )
    spec = _spec_from_dict(manifest["spec"]) if manifest.get("spec") else None
    return records, spec
