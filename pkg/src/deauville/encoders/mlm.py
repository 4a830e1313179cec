"""Masked-token pretraining and adaptation for the encoder."""

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import torch
import torch.nn.functional as F

from ..errors import TrainingDivergenceError, ValidationError
from .model import TransformerEncoder

IGNORE_INDEX = -100


@dataclass(frozen=True)
class MlmConfig:
    """Masked-token training settings.

    ``mask_action_split`` is (replace-with-[MASK], replace-with-random,
    keep-unchanged) over the selected positions.  ``epochs=0`` is legal
    and makes training a no-op.
    """

    mask_rate: float = 0.15
    epochs: int = 3
    learning_rate: float = 1e-4
    batch_size: int = 32
    mask_action_split: Tuple[float, float, float] = (0.8, 0.1, 0.1)
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValidationError("epochs must be >= 0")
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValidationError("batch_size must be positive")
        if not 0.0 < self.mask_rate < 1.0:
            raise ValidationError("mask_rate must lie in (0, 1)")
        if len(self.mask_action_split) != 3 or any(p < 0 for p in self.mask_action_split):
            raise ValidationError("mask_action_split must be three non-negative shares")
        if abs(sum(self.mask_action_split) - 1.0) > 1e-9:
            raise ValidationError("mask_action_split must sum to 1")


def pad_batch(
    sequences: Sequence[Sequence[int]], pad_id: int
) -> Tuple[torch.Tensor, torch.Tensor]:
    """Right-pad variable-length id lists into [batch, T] plus a bool mask."""
    if not sequences:
        raise ValidationError("cannot pad an empty batch")
    width = max(len(s) for s in sequences)
    ids = torch.full((len(sequences), width), pad_id, dtype=torch.long)
    mask = torch.zeros((len(sequences), width), dtype=torch.bool)
    for i, seq in enumerate(sequences):
        ids[i, : len(seq)] = torch.tensor(list(seq), dtype=torch.long)
        mask[i, : len(seq)] = True
    return ids, mask


def mask_tokens(
    token_ids: torch.Tensor,
    pad_mask: torch.Tensor,
    special_ids: Tuple[int, ...],
    mask_id: int,
    vocab_size: int,
    generator: torch.Generator,
    mask_rate: float = 0.15,
    mask_action_split: Tuple[float, float, float] = (0.8, 0.1, 0.1),
) -> Tuple[torch.Tensor, torch.Tensor]:
    """Corrupt exactly round(mask_rate * maskable) positions per sequence.

    Maskable means a real (non-pad) token that is not a special token.
    Selected positions become [MASK], a random content token, or stay
    unchanged per ``mask_action_split``; the returned labels hold original
    ids at selected positions and IGNORE_INDEX elsewhere.
    """
    if token_ids.shape != pad_mask.shape:
        raise ValidationError("token_ids and pad_mask shapes differ")
    special = torch.tensor(sorted(special_ids), dtype=torch.long)
    content_ids = torch.tensor(
        [i for i in range(vocab_size) if i not in set(special_ids)], dtype=torch.long
    )
    if content_ids.numel() == 0:
        raise ValidationError("vocabulary has no content tokens")
    p_mask, p_random, _ = mask_action_split

    maskable = pad_mask & ~torch.isin(token_ids, special)
    out = token_ids.clone()
    labels = torch.full_like(token_ids, IGNORE_INDEX)
    for row in range(token_ids.shape[0]):
        positions = maskable[row].nonzero(as_tuple=False).flatten()
        if positions.numel() == 0:
            raise ValidationError(f"sequence {row} has no maskable tokens")
        k = int(round(mask_rate * positions.numel()))
        if k == 0:
            continue
        perm = torch.randperm(positions.numel(), generator=generator)[:k]
        chosen = positions[perm]
        labels[row, chosen] = token_ids[row, chosen]
        u = torch.rand(k, generator=generator)
        to_mask = chosen[u < p_mask]
        to_random = chosen[(u >= p_mask) & (u < p_mask + p_random)]
        out[row, to_mask] = mask_id
        if to_random.numel():
            draws = torch.randint(
                content_ids.numel(), (to_random.numel(),), generator=generator
            )
            out[row, to_random] = content_ids[draws]
    return out, labels


def _run_mlm_training(
    model: TransformerEncoder,
    sequences: List[Sequence[int]],
    pad_id: int,
    special_ids: Tuple[int, ...],
    mask_id: int,
    config: MlmConfig,
) -> List[Dict]:
    if not sequences:
        raise ValidationError("no sequences to train on")
    if config.epochs == 0:
        model.eval()
        return []
    gen = torch.Generator().manual_seed(config.seed)
    opt = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    vocab_size = model.cfg.vocab_size
    history: List[Dict] = []
    model.train()
    for epoch in range(config.epochs):
        order = torch.randperm(len(sequences), generator=gen).tolist()
        total_loss = 0.0
        total_masked = 0
        n_batches = 0
        for lo in range(0, len(order), config.batch_size):
            batch = [sequences[i] for i in order[lo : lo + config.batch_size]]
            ids, pad_mask = pad_batch(batch, pad_id)
            inputs, labels = mask_tokens(
                ids,
                pad_mask,
                special_ids,
                mask_id,
                vocab_size,
                gen,
                mask_rate=config.mask_rate,
                mask_action_split=config.mask_action_split,
            )
            n_masked = int((labels != IGNORE_INDEX).sum())
            if n_masked == 0:
                continue
            hidden = model(inputs, pad_mask)
            logits = model.mlm_logits(hidden)
            loss = F.cross_entropy(
                logits.view(-1, vocab_size), labels.view(-1), ignore_index=IGNORE_INDEX
            )
            if not torch.isfinite(loss):
                raise TrainingDivergenceError(
                    f"masked-token loss became non-finite in epoch {epoch}"
                )
            opt.zero_grad()
            loss.backward()
            opt.step()
            total_loss += float(loss.detach()) * n_masked
            total_masked += n_masked
            n_batches += 1
        history.append(
            {
                "epoch": epoch,
                "loss": total_loss / max(total_masked, 1),
                "n_masked": total_masked,
                "n_batches": n_batches,
            }
        )
    model.eval()
    return history


def generic_pretrain(
    model: TransformerEncoder,
    sequences: List[Sequence[int]],
    pad_id: int,
    special_ids: Tuple[int, ...],
    mask_id: int,
    config: Optional[MlmConfig] = None,
) -> List[Dict]:
    """Masked-token training on out-of-domain text; mutates the model."""
    return _run_mlm_training(
        model, sequences, pad_id, special_ids, mask_id, config or MlmConfig()
    )


def domain_adapt(
    model: TransformerEncoder,
    sequences: List[Sequence[int]],
    pad_id: int,
    special_ids: Tuple[int, ...],
    mask_id: int,
    config: Optional[MlmConfig] = None,
) -> List[Dict]:
    """Continue masked-token training on in-domain report text."""
    return _run_mlm_training(
        model, sequences, pad_id, special_ids, mask_id, config or MlmConfig()
    )


def masked_token_perplexity(
    model: TransformerEncoder,
    sequences: List[Sequence[int]],
    pad_id: int,
    special_ids: Tuple[int, ...],
    mask_id: int,
    seed: int = 0,
    mask_rate: float = 0.15,
    batch_size: int = 32,
) -> float:
    """exp(mean masked-token cross entropy) under a fixed masking draw.

    Selected positions are always replaced by [MASK] here; with the same
    seed the same positions are masked, so scores for two models on one
    corpus are directly comparable.
    """
    if not sequences:
        raise ValidationError("no sequences to evaluate")
    gen = torch.Generator().manual_seed(seed)
    model.eval()
    total_loss = 0.0
    total_masked = 0
    with torch.no_grad():
        for lo in range(0, len(sequences), batch_size):
            batch = sequences[lo : lo + batch_size]
            ids, pad_mask = pad_batch(batch, pad_id)
            inputs, labels = mask_tokens(
                ids, pad_mask, special_ids, mask_id, model.cfg.vocab_size, gen,
                mask_rate=mask_rate, mask_action_split=(1.0, 0.0, 0.0),
            )
            sel = labels != IGNORE_INDEX
            if not bool(sel.any()):
                continue
            logits = model.mlm_logits(model(inputs, pad_mask))
            loss = F.cross_entropy(
                logits.view(-1, model.cfg.vocab_size),
                labels.view(-1),
                ignore_index=IGNORE_INDEX,
                reduction="sum",
            )
            total_loss += float(loss)
            total_masked += int(sel.sum())
    if total_masked == 0:
        raise ValidationError("masking selected no positions; sequences too short")
    return math.exp(total_loss / total_masked)
