"""Assembled classifiers and batched prediction."""

from typing import List, Sequence, Tuple

import numpy as np
import torch
import torch.nn as nn

from ..encoders.mlm import pad_batch
from ..encoders.model import TransformerEncoder
from ..errors import ValidationError
from .heads import ClassificationHead

N_CLASSES = 5


class TextClassifier(nn.Module):
    def __init__(self, encoder: TransformerEncoder, head: ClassificationHead):
        super().__init__()
        if head.input_dim != encoder.cfg.hidden_size:
            raise ValidationError("head input dim must equal encoder hidden size")
        self.encoder = encoder
        self.head = head

    def forward(self, token_ids: torch.Tensor, pad_mask: torch.Tensor) -> torch.Tensor:
        hidden = self.encoder(token_ids, pad_mask)
        return self.head(self.encoder.pooled(hidden))


class VisionClassifier(nn.Module):
    def __init__(self, encoder: nn.Module, head: ClassificationHead):
        super().__init__()
        if head.input_dim != encoder.d_out:
            raise ValidationError("head input dim must equal vision feature dim")
        self.encoder = encoder
        self.head = head

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        return self.head(self.encoder(images))


class MultimodalClassifier(nn.Module):
    """Late fusion: pooled text and image features concatenated into one head."""

    def __init__(
        self,
        text_encoder: TransformerEncoder,
        vision_encoder: nn.Module,
        head: ClassificationHead,
    ):
        super().__init__()
        expected = text_encoder.cfg.hidden_size + vision_encoder.d_out
        if head.input_dim != expected:
            raise ValidationError(
                f"fusion head must take {expected} features "
                f"(text {text_encoder.cfg.hidden_size} + vision {vision_encoder.d_out})"
            )
        self.text_encoder = text_encoder
        self.vision_encoder = vision_encoder
        self.head = head

    @property
    def fusion_input_dim(self) -> int:
        return self.head.input_dim

    def forward(
        self, token_ids: torch.Tensor, pad_mask: torch.Tensor, images: torch.Tensor
    ) -> torch.Tensor:
        text_feat = self.text_encoder.pooled(self.text_encoder(token_ids, pad_mask))
        vis_feat = self.vision_encoder(images)
        return self.head(torch.cat([text_feat, vis_feat], dim=1))


def _finish(all_logits: List[torch.Tensor]) -> Tuple[np.ndarray, np.ndarray]:
    logits = torch.cat(all_logits, dim=0)
    probs = torch.softmax(logits, dim=1).numpy()
    # argmax takes the first maximum, so ties break toward the lowest class
    labels = probs.argmax(axis=1) + 1
    return labels.astype(np.int64), probs


@torch.no_grad()
def predict_text(
    model: TextClassifier, sequences: Sequence[Sequence[int]], pad_id: int, batch_size: int = 64
) -> Tuple[np.ndarray, np.ndarray]:
    """Predict scores 1..5 plus class probabilities for token sequences."""
    if not sequences:
        raise ValidationError("nothing to predict")
    model.eval()
    out = []
    for lo in range(0, len(sequences), batch_size):
        ids, mask = pad_batch(sequences[lo : lo + batch_size], pad_id)
        out.append(model(ids, mask))
    return _finish(out)


@torch.no_grad()
def predict_vision(
    model: VisionClassifier, images: Sequence[np.ndarray], batch_size: int = 64
) -> Tuple[np.ndarray, np.ndarray]:
    if not images:
        raise ValidationError("nothing to predict")
    model.eval()
    out = []
    for lo in range(0, len(images), batch_size):
        batch = np.stack(images[lo : lo + batch_size])
        out.append(model(torch.from_numpy(batch).float()))
    return _finish(out)


@torch.no_grad()
def predict_multimodal(
    model: MultimodalClassifier,
    sequences: Sequence[Sequence[int]],
    images: Sequence[np.ndarray],
    pad_id: int,
    batch_size: int = 64,
) -> Tuple[np.ndarray, np.ndarray]:
    if len(sequences) != len(images):
        raise ValidationError("sequence and image counts differ")
    if not sequences:
        raise ValidationError("nothing to predict")
    model.eval()
    out = []
    for lo in range(0, len(sequences), batch_size):
        ids, mask = pad_batch(sequences[lo : lo + batch_size], pad_id)
        batch = np.stack(images[lo : lo + batch_size])
        out.append(model(ids, mask, torch.from_numpy(batch).float()))
    return _finish(out)
