"""Image pathways: a patch transformer, a small convolutional net, and
train-time augmentations."""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
import torch
import torch.nn as nn
from scipy import ndimage

from ..encoders.model import EncoderSpec, TransformerEncoder
from ..errors import ValidationError

VISION_KINDS = ("patch-transformer", "convolutional")
AUGMENTATIONS = ("hflip", "vflip", "rotate", "translate")


@dataclass(frozen=True)
class VisionSpec:
    kind: str = "patch-transformer"
    input_size: Tuple[int, int] = (64, 64)
    patch_size: int = 8
    hidden_size: int = 64
    n_layers: int = 2
    n_heads: int = 4
    ff_size: int = 128
    dropout: float = 0.1
    normalize_pixels: bool = True

    def __post_init__(self):
        if self.kind not in VISION_KINDS:
            raise ValidationError(f"kind must be one of {VISION_KINDS}, got {self.kind!r}")
        h, w = self.input_size
        if h != w:
            raise ValidationError("input_size must be square")
        if h < 16:
            raise ValidationError("input_size must be at least 16x16")
        if self.kind == "patch-transformer":
            if h < self.patch_size:
                raise ValidationError("image smaller than one patch")
            if h % self.patch_size:
                raise ValidationError("input_size must be a multiple of patch_size")

    @property
    def n_patches(self) -> int:
        h, w = self.input_size
        return (h // self.patch_size) * (w // self.patch_size)


def _check_images(images: torch.Tensor, spec: VisionSpec) -> torch.Tensor:
    if images.dim() != 3:
        raise ValidationError("expected images shaped [batch, H, W]")
    if tuple(images.shape[1:]) != tuple(spec.input_size):
        raise ValidationError(
            f"expected image size {spec.input_size}, got {tuple(images.shape[1:])}"
        )
    if spec.normalize_pixels:
        # Fixed affine [0,1] -> [-1,1]; keeps absolute intensity ordering,
        # which carries the class signal, unlike per-image standardization.
        images = images * 2.0 - 1.0
    return images


class PatchTransformer(nn.Module):
    """Non-overlapping patches through the shared transformer trunk.

    A learned class token is prepended; its final state is the pooled
    feature, matching the text encoder's first-token pooling.
    """

    def __init__(self, spec: VisionSpec):
        super().__init__()
        self.spec = spec
        p = spec.patch_size
        self.patch_embed = nn.Linear(p * p, spec.hidden_size)
        self.cls_token = nn.Parameter(torch.zeros(1, 1, spec.hidden_size))
        trunk_cfg = EncoderSpec(
            vocab_size=8,  # unused: this trunk only ever sees embeddings
            n_layers=spec.n_layers,
            n_heads=spec.n_heads,
            hidden_size=spec.hidden_size,
            ff_size=spec.ff_size,
            max_positions=spec.n_patches + 1,
            dropout=spec.dropout,
        )
        self.trunk = TransformerEncoder(trunk_cfg)
        nn.init.normal_(self.cls_token, std=0.02)

    @property
    def d_out(self) -> int:
        return self.spec.hidden_size

    def _patchify(self, images: torch.Tensor) -> torch.Tensor:
        b, h, w = images.shape
        p = self.spec.patch_size
        x = images.reshape(b, h // p, p, w // p, p)
        x = x.permute(0, 1, 3, 2, 4).reshape(b, (h // p) * (w // p), p * p)
        return x

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        """images [batch, H, W] in [0,1] -> pooled features [batch, hidden]."""
        images = _check_images(images, self.spec)
        patches = self.patch_embed(self._patchify(images))
        cls = self.cls_token.expand(patches.shape[0], 1, -1).to(patches.dtype)
        embeds = torch.cat([cls, patches], dim=1)
        hidden = self.trunk(inputs_embeds=embeds)
        return self.trunk.pooled(hidden)


class ConvEncoder(nn.Module):
    """Two strided conv blocks plus pooling; the lightweight comparator."""

    def __init__(self, spec: VisionSpec):
        super().__init__()
        self.spec = spec
        self.features = nn.Sequential(
            nn.Conv2d(1, 16, kernel_size=3, stride=2, padding=1),
            nn.ReLU(),
            nn.Conv2d(16, 32, kernel_size=3, stride=2, padding=1),
            nn.ReLU(),
            # Max pooling: focal peak intensity is the discriminative cue.
            nn.AdaptiveMaxPool2d((4, 4)),
        )
        self.proj = nn.Linear(32 * 4 * 4, spec.hidden_size)

    @property
    def d_out(self) -> int:
        return self.spec.hidden_size

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        images = _check_images(images, self.spec)
        x = self.features(images[:, None, :, :])
        return self.proj(x.flatten(1))


def build_vision_encoder(spec: VisionSpec) -> nn.Module:
    if spec.kind == "patch-transformer":
        return PatchTransformer(spec)
    return ConvEncoder(spec)


def augment_image(
    pixels: np.ndarray,
    rng: np.random.Generator,
    augmentations: Sequence[str] = AUGMENTATIONS,
) -> np.ndarray:
    """Train-time augmentation: flips, small rotation, small translation.

    Only the named operations are applied (and draw randomness), in the
    fixed order hflip, vflip, rotate, translate.  Evaluation never calls
    this; the dataset wrappers gate it on the training pass.
    """
    if pixels.ndim != 2:
        raise ValidationError("augment_image expects a single 2-d image")
    unknown = set(augmentations) - set(AUGMENTATIONS)
    if unknown:
        raise ValidationError(f"unknown augmentations: {sorted(unknown)}")
    out = pixels
    if "hflip" in augmentations and rng.random() < 0.5:
        out = out[:, ::-1]
    if "vflip" in augmentations and rng.random() < 0.5:
        out = out[::-1, :]
    if "rotate" in augmentations:
        angle = float(rng.uniform(-15.0, 15.0))
        out = ndimage.rotate(out, angle, reshape=False, order=1, mode="constant", cval=0.0)
    if "translate" in augmentations:
        h, w = out.shape
        dy = float(rng.uniform(-0.1, 0.1)) * h
        dx = float(rng.uniform(-0.1, 0.1)) * w
        out = ndimage.shift(out, (dy, dx), order=1, mode="constant", cval=0.0)
    return np.clip(np.ascontiguousarray(out, dtype=np.float64), 0.0, 1.0)
