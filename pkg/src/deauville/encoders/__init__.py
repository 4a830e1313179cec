from .model import EncoderSpec, TransformerEncoder, encode, finite_difference_check
from .mlm import (
    IGNORE_INDEX,
    MlmConfig,
    domain_adapt,
    generic_pretrain,
    mask_tokens,
    masked_token_perplexity,
    pad_batch,
)
from .checkpoint import STAGES, load_checkpoint, require_stage_in, save_checkpoint

__all__ = [
    "EncoderSpec",
    "TransformerEncoder",
    "encode",
    "finite_difference_check",
    "IGNORE_INDEX",
    "MlmConfig",
    "mask_tokens",
    "pad_batch",
    "generic_pretrain",
    "domain_adapt",
    "masked_token_perplexity",
    "STAGES",
    "save_checkpoint",
    "load_checkpoint",
    "require_stage_in",
]
