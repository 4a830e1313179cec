from .normalize import (
    DEFAULT_NORMALIZATION,
    DEFAULT_SYNONYM_MAP,
    NormalizationConfig,
    normalize,
)
from .bpe import SPECIAL_TOKENS, SubwordVocab, train_subword_vocab, load_vocab, save_vocab
from .inputs import MAX_INPUT_TOKENS, TokenSequence, assemble_input, build_input

__all__ = [
    "DEFAULT_NORMALIZATION",
    "DEFAULT_SYNONYM_MAP",
    "NormalizationConfig",
    "normalize",
    "SPECIAL_TOKENS",
    "SubwordVocab",
    "train_subword_vocab",
    "load_vocab",
    "save_vocab",
    "MAX_INPUT_TOKENS",
    "TokenSequence",
    "assemble_input",
    "build_input",
]
