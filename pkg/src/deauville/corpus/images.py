"""Synthetic maximum-intensity-projection style scan renderer.

Images follow a fixed intensity convention tied to the five-point response
scale: a body silhouette at background level, a mediastinal blood-pool
region at intensity ``m``, a liver region at intensity ``l``, and zero or
more focal lesions whose peak intensity falls in a class-specific interval:

    score 1: no lesions (nothing above background outside the organs)
    score 2: peak in (background, m)
    score 3: peak in (m, l]
    score 4: peak in (l, l + delta]
    score 5: peak in (l + delta, 1)
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ..errors import ValidationError
from .records import GrayscaleImage, VALID_LABELS


@dataclass(frozen=True)
class IntensityAnchors:
    """Reference intensity levels shared by every rendered scan."""

    body: float = 0.12
    mediastinum: float = 0.35
    liver: float = 0.6
    delta_mod: float = 0.2

    def __post_init__(self):
        if not 0.0 < self.body < self.mediastinum < self.liver < 1.0:
            raise ValidationError("anchors must satisfy 0 < body < m < l < 1")
        if self.delta_mod <= 0 or self.liver + self.delta_mod >= 1.0:
            raise ValidationError("delta_mod must be positive with l + delta < 1")

    def peak_interval(self, score: int) -> Optional[Tuple[float, float]]:
        """Open/half-open peak-intensity interval for a score, None for 1."""
        if score not in VALID_LABELS:
            raise ValidationError(f"score must be in 1..5, got {score!r}")
        if score == 1:
            return None
        m, l, d = self.mediastinum, self.liver, self.delta_mod
        return {
            2: (self.body, m),
            3: (m, l),
            4: (l, l + d),
            5: (l + d, 1.0),
        }[score]


@dataclass
class ScanLayout:
    """Geometry record for one rendered scan, used by mask arithmetic."""

    anchors: IntensityAnchors
    body_mask: np.ndarray
    mediastinum_mask: np.ndarray
    liver_mask: np.ndarray
    lesion_mask: np.ndarray
    lesion_peaks: List[float] = field(default_factory=list)


def _ellipse_mask(h: int, w: int, cy: float, cx: float, ry: float, rx: float) -> np.ndarray:
    ys = (np.arange(h) + 0.5) / h
    xs = (np.arange(w) + 0.5) / w
    yy = ((ys[:, None] - cy) / ry) ** 2
    xx = ((xs[None, :] - cx) / rx) ** 2
    return (yy + xx) <= 1.0


def render_scan(
    score: int,
    size: Tuple[int, int],
    rng: np.random.Generator,
    anchors: Optional[IntensityAnchors] = None,
    crop_bottom: float = 0.0,
) -> Tuple[GrayscaleImage, ScanLayout]:
    """Render one scan and return the image plus its layout record.

    ``crop_bottom`` zeroes out the lowest fraction of rows, standing in for
    acquisitions that stop at the thighs.
    """
    if anchors is None:
        anchors = IntensityAnchors()
    h, w = size
    if h < 16 or w < 16:
        raise ValidationError("scan size must be at least 16x16")
    if not 0.0 <= crop_bottom < 0.5:
        raise ValidationError("crop_bottom must lie in [0, 0.5)")

    # Torso ellipse plus a head disc; slight per-exam jitter keeps scans
    # from being pixel-identical across exams.
    torso_ry = 0.40 + float(rng.uniform(-0.02, 0.02))
    torso_rx = 0.27 + float(rng.uniform(-0.02, 0.02))
    torso = _ellipse_mask(h, w, 0.55, 0.5, torso_ry, torso_rx)
    head = _ellipse_mask(h, w, 0.10, 0.5, 0.075, 0.075)
    body = torso | head

    mediastinum = _ellipse_mask(h, w, 0.32, 0.5, 0.085, 0.045) & torso
    liver = _ellipse_mask(h, w, 0.47, 0.40, 0.065, 0.10) & torso
    if not mediastinum.any() or not liver.any():
        raise ValidationError("scan size too small to place reference organs")

    img = np.zeros((h, w), dtype=np.float64)
    img[body] = anchors.body
    img[mediastinum] = anchors.mediastinum
    img[liver] = anchors.liver

    organ = mediastinum | liver
    lesion_mask = np.zeros((h, w), dtype=bool)
    peaks: List[float] = []

    interval = anchors.peak_interval(score)
    if interval is not None:
        lo, hi = interval
        n_lesions = 1 + int(rng.integers(0, 3))
        placed = 0
        # Successive relaxation: shrink the clearance requirement if the
        # grid is too coarse, but never let a lesion center sit on an organ.
        for margin_scale in (1.0, 0.5, 0.0):
            if placed >= n_lesions:
                break
            for _ in range(200):
                if placed >= n_lesions:
                    break
                cy = float(rng.uniform(0.2, 0.9))
                cx = float(rng.uniform(0.25, 0.75))
                iy = min(h - 1, max(0, int(cy * h)))
                ix = min(w - 1, max(0, int(cx * w)))
                if not torso[iy, ix] or organ[iy, ix] or lesion_mask[iy, ix]:
                    continue
                r = float(rng.uniform(0.035, 0.07))
                sigma = max(r / 2.0, 1.0 / max(h, w))
                ys = (np.arange(h) + 0.5) / h - (iy + 0.5) / h
                xs = (np.arange(w) + 0.5) / w - (ix + 0.5) / w
                d2 = ys[:, None] ** 2 + xs[None, :] ** 2
                blob = d2 <= (r * (0.6 + 0.4 * margin_scale)) ** 2
                blob &= torso & ~organ
                if margin_scale > 0 and (blob & lesion_mask).any():
                    continue
                # Sample strictly inside the open interval, then force the
                # center pixel to the exact peak value.
                peak = float(rng.uniform(lo + 0.02, hi - 0.005))
                bump = peak * np.exp(-d2 / (2.0 * sigma**2))
                apply = blob & (bump > anchors.body)
                apply[iy, ix] = True
                img[apply] = np.maximum(img[apply], bump[apply])
                img[iy, ix] = peak
                lesion_mask |= apply
                peaks.append(peak)
                placed += 1
        if placed == 0:
            raise ValidationError("failed to place any lesion; scan too cramped")

    if crop_bottom > 0:
        cut = int(round(h * (1.0 - crop_bottom)))
        img[cut:, :] = 0.0
        for mask in (body, mediastinum, liver, lesion_mask):
            mask[cut:, :] = False

    img = np.clip(img, 0.0, 1.0)
    layout = ScanLayout(
        anchors=anchors,
        body_mask=body,
        mediastinum_mask=mediastinum,
        liver_mask=liver,
        lesion_mask=lesion_mask,
        lesion_peaks=peaks,
    )
    return GrayscaleImage(pixels=img), layout


def generate_image(
    score: int,
    size: Tuple[int, int] = (64, 64),
    seed: int = 0,
    anchors: Optional[IntensityAnchors] = None,
    crop_bottom: float = 0.0,
) -> GrayscaleImage:
    """Convenience wrapper: render a scan for a score from a bare seed."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    image, _ = render_scan(score, size, rng, anchors=anchors, crop_bottom=crop_bottom)
    return image
