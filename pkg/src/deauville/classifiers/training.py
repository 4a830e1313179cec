"""Supervised fine-tuning with early stopping on validation loss."""

import copy
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from ..encoders.mlm import pad_batch
from ..errors import TrainingDivergenceError, ValidationError
from .vision import AUGMENTATIONS, augment_image

Batch = Tuple[Dict[str, torch.Tensor], torch.Tensor]


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    max_epochs: int = 20
    early_stop_patience: int = 3
    batch_size: int = 32
    seed: int = 0
    augmentations: Tuple[str, ...] = AUGMENTATIONS

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValidationError("batch_size must be positive")
        if self.max_epochs < 1:
            raise ValidationError("max_epochs must be positive")
        if self.early_stop_patience < 1:
            raise ValidationError("early_stop_patience must be positive")
        if self.early_stop_patience >= self.max_epochs:
            raise ValidationError("early_stop_patience must be less than max_epochs")
        unknown = set(self.augmentations) - set(AUGMENTATIONS)
        if unknown:
            raise ValidationError(f"unknown augmentations: {sorted(unknown)}")


def _targets(labels: Sequence[int]) -> torch.Tensor:
    for lab in labels:
        if lab not in (1, 2, 3, 4, 5):
            raise ValidationError(f"labels must be scores 1..5, got {lab!r}")
    return torch.tensor([lab - 1 for lab in labels], dtype=torch.long)


class TextDataset:
    """Token sequences plus labels, batched for TextClassifier."""

    def __init__(self, sequences: List[Sequence[int]], labels: List[int], pad_id: int):
        if len(sequences) != len(labels):
            raise ValidationError("sequences and labels must align")
        if not sequences:
            raise ValidationError("dataset is empty")
        self.sequences = [list(s) for s in sequences]
        self.targets = _targets(labels)
        self.pad_id = pad_id

    def __len__(self) -> int:
        return len(self.sequences)

    def batch(
        self, indices: Sequence[int], augment_rng=None, augmentations=AUGMENTATIONS
    ) -> Batch:
        ids, mask = pad_batch([self.sequences[i] for i in indices], self.pad_id)
        return {"token_ids": ids, "pad_mask": mask}, self.targets[list(indices)]


class VisionDataset:
    """Images plus labels; augments on training batches only."""

    def __init__(self, images: List[np.ndarray], labels: List[int]):
        if len(images) != len(labels):
            raise ValidationError("images and labels must align")
        if not images:
            raise ValidationError("dataset is empty")
        self.images = images
        self.targets = _targets(labels)

    def __len__(self) -> int:
        return len(self.images)

    def batch(
        self, indices: Sequence[int], augment_rng=None, augmentations=AUGMENTATIONS
    ) -> Batch:
        picked = [self.images[i] for i in indices]
        if augment_rng is not None:
            picked = [augment_image(img, augment_rng, augmentations) for img in picked]
        stack = torch.from_numpy(np.stack(picked)).float()
        return {"images": stack}, self.targets[list(indices)]


class MultimodalDataset:
    def __init__(
        self,
        sequences: List[Sequence[int]],
        images: List[np.ndarray],
        labels: List[int],
        pad_id: int,
    ):
        if not (len(sequences) == len(images) == len(labels)):
            raise ValidationError("sequences, images, and labels must align")
        if not sequences:
            raise ValidationError("dataset is empty")
        self.sequences = [list(s) for s in sequences]
        self.images = images
        self.targets = _targets(labels)
        self.pad_id = pad_id

    def __len__(self) -> int:
        return len(self.sequences)

    def batch(
        self, indices: Sequence[int], augment_rng=None, augmentations=AUGMENTATIONS
    ) -> Batch:
        ids, mask = pad_batch([self.sequences[i] for i in indices], self.pad_id)
        picked = [self.images[i] for i in indices]
        if augment_rng is not None:
            picked = [augment_image(img, augment_rng, augmentations) for img in picked]
        stack = torch.from_numpy(np.stack(picked)).float()
        return (
            {"token_ids": ids, "pad_mask": mask, "images": stack},
            self.targets[list(indices)],
        )


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    val_loss: float
    val_accuracy: float


@dataclass
class TrainResult:
    history: List[EpochStats] = field(default_factory=list)
    best_epoch: int = -1
    best_val_loss: float = float("inf")
    stopped_early: bool = False


@torch.no_grad()
def _evaluate(model: nn.Module, data, batch_size: int) -> Tuple[float, float]:
    model.eval()
    total_loss = 0.0
    correct = 0
    for lo in range(0, len(data), batch_size):
        idx = range(lo, min(lo + batch_size, len(data)))
        inputs, targets = data.batch(list(idx))
        logits = model(**inputs)
        total_loss += float(F.cross_entropy(logits, targets, reduction="sum"))
        correct += int((logits.argmax(dim=1) == targets).sum())
    return total_loss / len(data), correct / len(data)


def train_classifier(
    model: nn.Module,
    train_data,
    val_data,
    config: Optional[TrainConfig] = None,
) -> TrainResult:
    """Fit with Adam; stop after ``early_stop_patience`` non-improving
    validation epochs.

    The model ends up holding the weights from the best validation epoch,
    not the last one.  Only parameters with ``requires_grad`` are updated,
    so callers can freeze the encoder and tune the head alone.  Raises
    TrainingDivergenceError on non-finite loss.
    """
    config = config or TrainConfig()
    seed = config.seed
    gen = torch.Generator().manual_seed(seed)
    trainable = [p for p in model.parameters() if p.requires_grad]
    if not trainable:
        raise ValidationError("model has no trainable parameters")
    opt = torch.optim.Adam(trainable, lr=config.learning_rate)
    result = TrainResult()
    best_state = None
    bad_epochs = 0

    for epoch in range(config.max_epochs):
        model.train()
        order = torch.randperm(len(train_data), generator=gen).tolist()
        # Augmentation draws come from a per-epoch stream so resuming a
        # run replays identical batches.
        aug_rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence((seed, 3571, epoch)))
        )
        total = 0.0
        for lo in range(0, len(order), config.batch_size):
            indices = order[lo : lo + config.batch_size]
            inputs, targets = train_data.batch(
                indices, augment_rng=aug_rng, augmentations=config.augmentations
            )
            logits = model(**inputs)
            loss = F.cross_entropy(logits, targets)
            if not torch.isfinite(loss):
                raise TrainingDivergenceError(
                    f"training loss became non-finite in epoch {epoch}"
                )
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += float(loss.detach()) * len(indices)
        train_loss = total / len(train_data)
        val_loss, val_acc = _evaluate(model, val_data, config.batch_size)
        if not np.isfinite(val_loss):
            raise TrainingDivergenceError(f"validation loss non-finite in epoch {epoch}")
        result.history.append(EpochStats(epoch, train_loss, val_loss, val_acc))

        if val_loss < result.best_val_loss:
            result.best_val_loss = val_loss
            result.best_epoch = epoch
            best_state = copy.deepcopy(model.state_dict())
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= config.early_stop_patience:
                result.stopped_early = True
                break

    if best_state is not None:
        model.load_state_dict(best_state)
    model.eval()
    return result
