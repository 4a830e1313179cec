"""A small bidirectional transformer encoder.

Written against plain tensor ops (no fused attention) so the whole model
runs in float64 when gradients are checked against finite differences.
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import torch
import torch.nn as nn

from ..errors import ValidationError


@dataclass(frozen=True)
class EncoderSpec:
    vocab_size: int
    n_layers: int = 2
    n_heads: int = 4
    hidden_size: int = 64
    ff_size: int = 128
    max_positions: int = 512
    dropout: float = 0.1

    def __post_init__(self):
        if self.vocab_size < 6:
            raise ValidationError("vocab_size must cover specials plus content")
        if self.n_layers < 1 or self.n_heads < 1:
            raise ValidationError("n_layers and n_heads must be positive")
        if self.hidden_size % self.n_heads != 0:
            raise ValidationError("hidden_size must be divisible by n_heads")
        if self.max_positions < 8:
            raise ValidationError("max_positions must be at least 8")
        if not 0.0 <= self.dropout < 1.0:
            raise ValidationError("dropout must lie in [0, 1)")


class _SelfAttention(nn.Module):
    def __init__(self, cfg: EncoderSpec):
        super().__init__()
        self.n_heads = cfg.n_heads
        self.d_head = cfg.hidden_size // cfg.n_heads
        self.qkv = nn.Linear(cfg.hidden_size, 3 * cfg.hidden_size)
        self.out = nn.Linear(cfg.hidden_size, cfg.hidden_size)
        self.drop = nn.Dropout(cfg.dropout)

    def forward(self, x: torch.Tensor, pad_mask: Optional[torch.Tensor]) -> torch.Tensor:
        b, t, d = x.shape
        qkv = self.qkv(x).view(b, t, 3, self.n_heads, self.d_head)
        q, k, v = qkv.unbind(dim=2)
        # [b, heads, t, d_head]
        q = q.transpose(1, 2)
        k = k.transpose(1, 2)
        v = v.transpose(1, 2)
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.d_head)
        if pad_mask is not None:
            # pad_mask: [b, t] True where real tokens
            blocked = ~pad_mask[:, None, None, :]
            scores = scores.masked_fill(blocked, torch.finfo(scores.dtype).min)
        attn = torch.softmax(scores, dim=-1)
        attn = self.drop(attn)
        ctx = (attn @ v).transpose(1, 2).reshape(b, t, d)
        return self.out(ctx)


class _EncoderLayer(nn.Module):
    def __init__(self, cfg: EncoderSpec):
        super().__init__()
        self.attn = _SelfAttention(cfg)
        self.norm1 = nn.LayerNorm(cfg.hidden_size)
        self.ff = nn.Sequential(
            nn.Linear(cfg.hidden_size, cfg.ff_size),
            nn.GELU(),
            nn.Linear(cfg.ff_size, cfg.hidden_size),
        )
        self.norm2 = nn.LayerNorm(cfg.hidden_size)
        self.drop = nn.Dropout(cfg.dropout)

    def forward(self, x: torch.Tensor, pad_mask: Optional[torch.Tensor]) -> torch.Tensor:
        x = self.norm1(x + self.drop(self.attn(x, pad_mask)))
        x = self.norm2(x + self.drop(self.ff(x)))
        return x


class TransformerEncoder(nn.Module):
    """Token (or embedding) sequences in, contextual states out.

    Pooling is the first-position state, which input assembly reserves for
    the [START] token.
    """

    def __init__(self, cfg: EncoderSpec):
        super().__init__()
        self.cfg = cfg
        self.token_emb = nn.Embedding(cfg.vocab_size, cfg.hidden_size)
        self.pos_emb = nn.Embedding(cfg.max_positions, cfg.hidden_size)
        self.emb_norm = nn.LayerNorm(cfg.hidden_size)
        self.emb_drop = nn.Dropout(cfg.dropout)
        self.layers = nn.ModuleList(_EncoderLayer(cfg) for _ in range(cfg.n_layers))
        self.lm_head = nn.Linear(cfg.hidden_size, cfg.vocab_size)
        self.apply(self._init_weights)

    @staticmethod
    def _init_weights(module: nn.Module) -> None:
        if isinstance(module, (nn.Linear, nn.Embedding)):
            nn.init.normal_(module.weight, mean=0.0, std=0.02)
            if isinstance(module, nn.Linear) and module.bias is not None:
                nn.init.zeros_(module.bias)

    def forward(
        self,
        token_ids: Optional[torch.Tensor] = None,
        pad_mask: Optional[torch.Tensor] = None,
        inputs_embeds: Optional[torch.Tensor] = None,
    ) -> torch.Tensor:
        """Return hidden states [batch, seq, hidden_size].

        Exactly one of ``token_ids`` and ``inputs_embeds`` must be given;
        the embedding path lets non-text front ends (image patches) reuse
        the same trunk.
        """
        if (token_ids is None) == (inputs_embeds is None):
            raise ValidationError("pass exactly one of token_ids or inputs_embeds")
        if token_ids is not None:
            if token_ids.dim() != 2:
                raise ValidationError("token_ids must be [batch, seq]")
            if int(token_ids.max()) >= self.cfg.vocab_size or int(token_ids.min()) < 0:
                raise ValidationError("token id outside encoder vocabulary")
            x = self.token_emb(token_ids)
        else:
            x = inputs_embeds
        t = x.shape[1]
        if t > self.cfg.max_positions:
            raise ValidationError(
                f"sequence length {t} exceeds max_positions {self.cfg.max_positions}"
            )
        positions = torch.arange(t, device=x.device)
        x = x + self.pos_emb(positions)[None, :, :]
        x = self.emb_drop(self.emb_norm(x))
        for layer in self.layers:
            x = layer(x, pad_mask)
        return x

    def pooled(self, hidden: torch.Tensor) -> torch.Tensor:
        return hidden[:, 0, :]

    def mlm_logits(self, hidden: torch.Tensor) -> torch.Tensor:
        return self.lm_head(hidden)


def encode(model: TransformerEncoder, token_ids) -> Tuple[torch.Tensor, torch.Tensor]:
    """Encode one sequence; returns (states [seq, hidden], pooled [hidden])."""
    ids = torch.as_tensor(list(token_ids), dtype=torch.long)
    if ids.dim() != 1 or ids.numel() == 0:
        raise ValidationError("encode expects one non-empty id sequence")
    model.eval()
    with torch.no_grad():
        hidden = model(token_ids=ids[None, :])
    return hidden[0], hidden[0, 0, :]


def finite_difference_check(
    model: nn.Module,
    loss_fn,
    n_params: int = 10,
    seed: int = 0,
    step: float = 1e-3,
) -> float:
    """Compare analytic gradients with central differences.

    ``loss_fn(model)`` must return a scalar loss and be deterministic.
    Picks ``n_params`` random weight scalars and returns the largest
    relative error.  The caller should put the model in float64 and eval
    mode first; float32 rounding would swamp the comparison.
    """
    params = [p for p in model.parameters() if p.requires_grad]
    if not params:
        raise ValidationError("model has no trainable parameters")
    gen = torch.Generator().manual_seed(seed)

    model.zero_grad()
    loss = loss_fn(model)
    loss.backward()

    sizes = [p.numel() for p in params]
    total = sum(sizes)
    worst = 0.0
    for flat_idx in torch.randint(0, total, (n_params,), generator=gen).tolist():
        p_idx = 0
        while flat_idx >= sizes[p_idx]:
            flat_idx -= sizes[p_idx]
            p_idx += 1
        param = params[p_idx]
        analytic = param.grad.reshape(-1)[flat_idx].item()
        with torch.no_grad():
            flat = param.data.reshape(-1)
            orig = flat[flat_idx].item()
            flat[flat_idx] = orig + step
            up = loss_fn(model).item()
            flat[flat_idx] = orig - step
            down = loss_fn(model).item()
            flat[flat_idx] = orig
        numeric = (up - down) / (2 * step)
        denom = max(abs(analytic), abs(numeric), 1e-12)
        worst = max(worst, abs(analytic - numeric) / denom)
    return worst
