"""Expert-prediction files: simulation, ingestion, and comparison.

The simulated reader agrees with the reference label at a configurable
rate; disagreements fall mostly on neighboring scores, which is what makes
the distance-weighted agreement much higher than raw accuracy.
"""

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import List, Mapping, Sequence, Tuple

import numpy as np

from ..errors import ValidationError
from .metrics import confusion_matrix, weighted_kappa, weighted_kappa_labels

# P(|error| = d) given a disagreement, before boundary clipping.
_ERROR_DISTANCE_P = {1: 0.80, 2: 0.15, 3: 0.04, 4: 0.01}

EXPERT_HEADER = ("exam_id", "predicted_ds")


@dataclass(frozen=True)
class ExpertReview:
    exam_ids: Tuple[str, ...]
    y_true: Tuple[int, ...]
    y_pred: Tuple[int, ...]
    accuracy: float
    kappa_linear: float
    kappa_quadratic: float


def simulate_expert_review(
    truths: Mapping[str, int],
    n_cases: int = 50,
    agreement_rate: float = 0.66,
    seed: int = 0,
) -> ExpertReview:
    """Draw ``n_cases`` without replacement and simulate a re-read."""
    ids = sorted(truths)
    if n_cases < 2:
        raise ValidationError("n_cases must be at least 2")
    if n_cases > len(ids):
        raise ValidationError(
            f"cannot sample {n_cases} cases from {len(ids)} labeled exams"
        )
    if not 0.0 < agreement_rate < 1.0:
        raise ValidationError("agreement_rate must lie in (0, 1)")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, 9001))))
    chosen = sorted(ids[int(i)] for i in rng.choice(len(ids), size=n_cases, replace=False))
    y_true = [int(truths[i]) for i in chosen]
    y_pred = []
    for lab in y_true:
        if rng.random() < agreement_rate:
            y_pred.append(lab)
            continue
        # Weigh each reachable wrong score by its distance probability.
        candidates = [s for s in (1, 2, 3, 4, 5) if s != lab]
        weights = np.array([_ERROR_DISTANCE_P[abs(s - lab)] for s in candidates])
        weights /= weights.sum()
        y_pred.append(int(rng.choice(candidates, p=weights)))
    acc = float(np.mean([t == p for t, p in zip(y_true, y_pred)]))
    return ExpertReview(
        exam_ids=tuple(chosen),
        y_true=tuple(y_true),
        y_pred=tuple(y_pred),
        accuracy=acc,
        kappa_linear=weighted_kappa_labels(y_true, y_pred, "linear"),
        kappa_quadratic=weighted_kappa_labels(y_true, y_pred, "quadratic"),
    )


def write_expert_csv(rows: Sequence[Tuple[str, int]], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(EXPERT_HEADER)
        for exam_id, ds in rows:
            writer.writerow([exam_id, int(ds)])


def read_expert_file(path: Path) -> List[Tuple[str, int]]:
    """Parse an expert CSV (exam_id, predicted_ds) with score validation."""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"expert file not found: {path}")
    rows: List[Tuple[str, int]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != EXPERT_HEADER:
            raise ValidationError(
                f"expert file must start with header {','.join(EXPERT_HEADER)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ValidationError(f"{path}:{lineno}: expected 2 fields")
            exam_id = row[0].strip()
            try:
                score = int(row[1])
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: score {row[1]!r} is not an integer")
            if score not in (1, 2, 3, 4, 5):
                raise ValidationError(f"{path}:{lineno}: score {score} outside 1..5")
            if not exam_id:
                raise ValidationError(f"{path}:{lineno}: empty exam id")
            rows.append((exam_id, score))
    if not rows:
        raise ValidationError(f"expert file {path} holds no predictions")
    return rows


@dataclass(frozen=True)
class ExpertComparison:
    """Single-point agreement of an expert file against reference labels."""

    n_cases: int
    accuracy: float
    kappa_linear: float
    kappa_quadratic: float
    confusion: np.ndarray


def compare_expert(expert_file: Path, truths: Mapping[str, int]) -> ExpertComparison:
    """Score an ingested expert file on the covered exam subset."""
    rows = read_expert_file(expert_file)
    seen = set()
    y_true, y_pred = [], []
    for exam_id, score in rows:
        if exam_id in seen:
            raise ValidationError(f"duplicate exam id in expert file: {exam_id}")
        seen.add(exam_id)
        if exam_id not in truths:
            raise ValidationError(f"expert file names unknown exam id: {exam_id}")
        y_true.append(int(truths[exam_id]))
        y_pred.append(score)
    mat = confusion_matrix(y_true, y_pred)
    return ExpertComparison(
        n_cases=len(y_true),
        accuracy=float(np.trace(mat) / mat.sum()),
        kappa_linear=weighted_kappa(mat, "linear"),
        kappa_quadratic=weighted_kappa(mat, "quadratic"),
        confusion=mat,
    )
