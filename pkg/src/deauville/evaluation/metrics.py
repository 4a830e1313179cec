"""Agreement metrics for ordinal five-class predictions."""

from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

from ..errors import UndefinedKappaError, ValidationError

N_CLASSES = 5

WEIGHTINGS = ("linear", "quadratic")


def _check_labels(y: Sequence[int], name: str) -> np.ndarray:
    arr = np.asarray(y)
    if arr.size == 0:
        raise ValidationError(f"{name} is empty")
    if not np.isin(arr, [1, 2, 3, 4, 5]).all():
        raise ValidationError(f"{name} must contain scores 1..5 only")
    return arr.astype(np.int64)


def accuracy(y_true: Sequence[int], y_pred: Sequence[int]) -> float:
    t = _check_labels(y_true, "y_true")
    p = _check_labels(y_pred, "y_pred")
    if t.shape != p.shape:
        raise ValidationError("y_true and y_pred lengths differ")
    return float((t == p).mean())


def confusion_matrix(y_true: Sequence[int], y_pred: Sequence[int]) -> np.ndarray:
    """Counts indexed [true, predicted] over scores 1..5."""
    t = _check_labels(y_true, "y_true")
    p = _check_labels(y_pred, "y_pred")
    if t.shape != p.shape:
        raise ValidationError("y_true and y_pred lengths differ")
    mat = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    np.add.at(mat, (t - 1, p - 1), 1)
    return mat


def _weight_matrix(weighting: str) -> np.ndarray:
    idx = np.arange(N_CLASSES, dtype=np.float64)
    diff = np.abs(idx[:, None] - idx[None, :])
    if weighting == "linear":
        return diff
    if weighting == "quadratic":
        return diff**2
    raise ValidationError(f"weighting must be one of {WEIGHTINGS}, got {weighting!r}")


def weighted_kappa(confusion: np.ndarray, weighting: str = "linear") -> float:
    """kappa = 1 - sum(w * O) / sum(w * E).

    O is the observed joint distribution, E the outer product of its
    marginals, w the distance weights (|i-j| linear, (i-j)^2 quadratic).
    Raises UndefinedKappaError when the expected disagreement is zero
    (both marginals concentrated on a single class), where chance
    correction is meaningless.
    """
    mat = np.asarray(confusion, dtype=np.float64)
    if mat.shape != (N_CLASSES, N_CLASSES):
        raise ValidationError(f"confusion must be {N_CLASSES}x{N_CLASSES}")
    if (mat < 0).any():
        raise ValidationError("confusion counts must be non-negative")
    total = mat.sum()
    if total == 0:
        raise ValidationError("confusion matrix is empty")
    w = _weight_matrix(weighting)
    observed = mat / total
    row = observed.sum(axis=1)
    col = observed.sum(axis=0)
    expected = np.outer(row, col)
    denom = float((w * expected).sum())
    if denom == 0.0:
        raise UndefinedKappaError(
            "expected disagreement is zero; both raters use a single class"
        )
    return 1.0 - float((w * observed).sum()) / denom


def weighted_kappa_labels(
    y_true: Sequence[int], y_pred: Sequence[int], weighting: str = "linear"
) -> float:
    return weighted_kappa(confusion_matrix(y_true, y_pred), weighting)


@dataclass(frozen=True)
class FoldResult:
    """One test-fold outcome; the confusion matrix is the source of truth."""

    iteration: int
    exam_ids: Tuple[str, ...]
    truths: Tuple[int, ...]
    preds: Tuple[int, ...]
    accuracy: float
    kappa_w: float
    confusion: np.ndarray

    def __post_init__(self):
        total = int(np.asarray(self.confusion).sum())
        if total != len(self.truths):
            raise ValidationError("confusion entries must sum to the test-set size")
        trace = float(np.trace(np.asarray(self.confusion)))
        if abs(self.accuracy - trace / total) > 1e-12:
            raise ValidationError("accuracy must equal trace(confusion)/sum(confusion)")

    def kappa(self, weighting: str) -> float:
        return weighted_kappa(self.confusion, weighting)


def fold_result(
    iteration: int,
    exam_ids: Sequence[str],
    truths: Sequence[int],
    preds: Sequence[int],
    weighting: str = "linear",
) -> FoldResult:
    """Assemble a FoldResult from aligned truth/prediction lists."""
    if not (len(exam_ids) == len(truths) == len(preds)):
        raise ValidationError("exam_ids, truths, and preds must align")
    mat = confusion_matrix(truths, preds)
    return FoldResult(
        iteration=iteration,
        exam_ids=tuple(exam_ids),
        truths=tuple(int(t) for t in truths),
        preds=tuple(int(p) for p in preds),
        accuracy=float(np.trace(mat) / mat.sum()),
        kappa_w=weighted_kappa(mat, weighting),
        confusion=mat,
    )


@dataclass(frozen=True)
class MetricSummary:
    """Cross-fold mean and spread for one model under one weighting."""

    model_name: str
    acc_mean: float
    acc_sd: float
    kappa_mean: float
    weighting: str = "linear"
    folds: Tuple[FoldResult, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.acc_sd < 0:
            raise ValidationError("acc_sd must be non-negative")
        if not 0.0 <= self.acc_mean <= 1.0:
            raise ValidationError("acc_mean must lie in [0, 1]")


def aggregate(
    folds: Sequence[FoldResult], model_name: str, weighting: str = "linear"
) -> MetricSummary:
    """Mean accuracy, sample-SD accuracy, and mean kappa over folds.

    Needs at least two folds; a single fold has no sample SD.
    """
    if len(folds) < 2:
        raise ValidationError("aggregation needs at least 2 folds")
    accs = np.array([f.accuracy for f in folds], dtype=np.float64)
    kappas = np.array([f.kappa(weighting) for f in folds], dtype=np.float64)
    return MetricSummary(
        model_name=model_name,
        acc_mean=float(accs.mean()),
        acc_sd=float(accs.std(ddof=1)),
        kappa_mean=float(kappas.mean()),
        weighting=weighting,
        folds=tuple(folds),
    )
