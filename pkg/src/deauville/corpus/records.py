"""Core record types for synthetic PET/CT exam corpora."""

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from ..errors import ValidationError

DeauvilleLabel = int

VALID_LABELS = (1, 2, 3, 4, 5)

# Empirical five-class mix used when a spec does not override it.  The weights
# are intentionally imbalanced; the largest class is the highest score.
DEFAULT_CLASS_WEIGHTS: Dict[int, float] = {
    1: 313 / 1664,
    2: 355 / 1664,
    3: 155 / 1664,
    4: 221 / 1664,
    5: 620 / 1664,
}


@dataclass(frozen=True)
class ReportDocument:
    """One dictated exam report split into its three canonical sections."""

    indication: str
    findings: str
    impression: str

    def __post_init__(self):
        for name in ("indication", "findings", "impression"):
            if not isinstance(getattr(self, name), str):
                raise ValidationError(f"report section {name!r} must be a string")


@dataclass(frozen=True)
class GrayscaleImage:
    """A single-channel intensity image with values in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        px = self.pixels
        if not isinstance(px, np.ndarray) or px.ndim != 2:
            raise ValidationError("image pixels must be a 2-d numpy array")
        if px.size == 0:
            raise ValidationError("image must not be empty")
        if not np.issubdtype(px.dtype, np.floating):
            raise ValidationError("image pixels must be floating point")
        lo, hi = float(px.min()), float(px.max())
        if lo < 0.0 or hi > 1.0:
            raise ValidationError(
                f"image intensities must lie in [0, 1], got [{lo:.4f}, {hi:.4f}]"
            )

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])


@dataclass(frozen=True)
class ExamRecord:
    """A synthetic exam: report text, optional image, optional label.

    ``label`` is ``None`` for exams whose report carries no recognizable
    score mention; such exams are excluded from supervised training but
    still contribute unlabeled text.
    """

    exam_id: str
    report: ReportDocument
    label: Optional[DeauvilleLabel]
    dictator_id: str
    exam_date: str
    image: Optional[GrayscaleImage] = None

    def __post_init__(self):
        if not self.exam_id:
            raise ValidationError("exam_id must be non-empty")
        if self.label is not None and self.label not in VALID_LABELS:
            raise ValidationError(f"label must be in 1..5 or None, got {self.label!r}")
        if not self.dictator_id:
            raise ValidationError("dictator_id must be non-empty")


@dataclass(frozen=True)
class CorpusSpec:
    """Parameters controlling synthetic corpus generation.

    ``class_weights`` give the sampling probability of each score 1..5 for
    the labeled portion.  ``unlabeled_fraction`` of exams receive a report
    without any score mention and a ``None`` label.  ``mention_style_mix``
    assigns sampling weight to each mention phrasing style by id; styles
    must be known to the report template bank.
    """

    n_exams: int
    seed: int = 0
    class_weights: Dict[int, float] = field(
        default_factory=lambda: dict(DEFAULT_CLASS_WEIGHTS)
    )
    mention_style_mix: Optional[Dict[str, float]] = None
    unlabeled_fraction: float = 0.0
    n_dictators: int = 44
    image_size: Tuple[int, int] = (64, 64)
    with_images: bool = True

    def __post_init__(self):
        if self.n_exams <= 0:
            raise ValidationError("n_exams must be positive")
        if self.n_dictators <= 0:
            raise ValidationError("n_dictators must be positive")
        if not 0.0 <= self.unlabeled_fraction < 1.0:
            raise ValidationError("unlabeled_fraction must lie in [0, 1)")
        if set(self.class_weights) != set(VALID_LABELS):
            raise ValidationError("class_weights must cover exactly scores 1..5")
        if any(w < 0 for w in self.class_weights.values()):
            raise ValidationError("class_weights must be non-negative")
        total = sum(self.class_weights.values())
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"class_weights must sum to 1, got {total!r}")
        h, w = self.image_size
        if h < 16 or w < 16:
            raise ValidationError("image_size must be at least 16x16")
        if self.mention_style_mix is not None:
            if not self.mention_style_mix:
                raise ValidationError("mention_style_mix must not be empty")
            if any(w < 0 for w in self.mention_style_mix.values()):
                raise ValidationError("mention_style_mix weights must be non-negative")
            if sum(self.mention_style_mix.values()) <= 0:
                raise ValidationError("mention_style_mix must have positive total weight")

    def normalized_class_weights(self) -> Dict[int, float]:
        total = sum(self.class_weights.values())
        return {k: v / total for k, v in sorted(self.class_weights.items())}
