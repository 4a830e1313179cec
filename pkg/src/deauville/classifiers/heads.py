"""Classification heads."""

from dataclasses import dataclass
from typing import Optional, Tuple

import torch
import torch.nn as nn

from ..errors import ValidationError

N_CLASSES = 5

_ACTIVATIONS = {
    "gelu": nn.GELU,
    "relu": nn.ReLU,
    "tanh": nn.Tanh,
}


@dataclass(frozen=True)
class HeadSpec:
    """Three-layer head: two hidden widths, then a 5-way output.

    ``hidden_dims=None`` defaults both widths to ``input_dim``, mirroring
    the convention of sizing head layers to the encoder they sit on.
    """

    input_dim: int
    hidden_dims: Optional[Tuple[int, int]] = None
    n_classes: int = N_CLASSES
    activation: str = "gelu"

    def __post_init__(self):
        if self.input_dim < 1:
            raise ValidationError("input_dim must be positive")
        if self.n_classes != N_CLASSES:
            raise ValidationError(f"n_classes must be {N_CLASSES}")
        if self.hidden_dims is not None:
            if len(self.hidden_dims) != 2 or any(d < 1 for d in self.hidden_dims):
                raise ValidationError("hidden_dims must be two positive widths")
        if self.activation not in _ACTIVATIONS:
            raise ValidationError(
                f"unknown activation {self.activation!r}; " f"choose from {sorted(_ACTIVATIONS)}"
            )

    @property
    def resolved_hidden_dims(self) -> Tuple[int, int]:
        return self.hidden_dims if self.hidden_dims is not None else (
            self.input_dim,
            self.input_dim,
        )


class ClassificationHead(nn.Module):
    def __init__(self, spec: HeadSpec):
        super().__init__()
        self.spec = spec
        d1, d2 = spec.resolved_hidden_dims
        act = _ACTIVATIONS[spec.activation]
        self.net = nn.Sequential(
            nn.Linear(spec.input_dim, d1),
            act(),
            nn.Linear(d1, d2),
            act(),
            nn.Linear(d2, spec.n_classes),
        )

    @property
    def input_dim(self) -> int:
        return self.spec.input_dim

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[-1] != self.spec.input_dim:
            raise ValidationError(
                f"head expected feature dim {self.spec.input_dim}, got {x.shape[-1]}"
            )
        return self.net(x)
