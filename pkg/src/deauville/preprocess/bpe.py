"""Deterministic byte-pair subword vocabulary.

Training is greedy pair merging over a word-frequency table.  Ties on pair
frequency break lexicographically, so the merge list depends only on the
training text, never on hash or iteration order.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

from ..errors import ValidationError

PAD, UNK, START, SEP, MASK = "[PAD]", "[UNK]", "[START]", "[SEP]", "[MASK]"
SPECIAL_TOKENS = (PAD, UNK, START, SEP, MASK)

_EOW = "</w>"


@dataclass
class SubwordVocab:
    """An ordered token inventory plus the merge list that produced it."""

    tokens: List[str]
    merges: List[Tuple[str, str]]
    token_to_id: Dict[str, int] = field(default_factory=dict)
    _ranks: Dict[Tuple[str, str], int] = field(default_factory=dict, repr=False)
    _cache: Dict[str, Tuple[int, ...]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if list(self.tokens[: len(SPECIAL_TOKENS)]) != list(SPECIAL_TOKENS):
            raise ValidationError("vocab must start with the special tokens")
        if len(set(self.tokens)) != len(self.tokens):
            raise ValidationError("vocab contains duplicate tokens")
        self.token_to_id = {t: i for i, t in enumerate(self.tokens)}
        self._ranks = {pair: i for i, pair in enumerate(self.merges)}

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def pad_id(self) -> int:
        return self.token_to_id[PAD]

    @property
    def unk_id(self) -> int:
        return self.token_to_id[UNK]

    @property
    def start_id(self) -> int:
        return self.token_to_id[START]

    @property
    def sep_id(self) -> int:
        return self.token_to_id[SEP]

    @property
    def mask_id(self) -> int:
        return self.token_to_id[MASK]

    @property
    def special_ids(self) -> Tuple[int, ...]:
        return tuple(self.token_to_id[t] for t in SPECIAL_TOKENS)

    def _merge_word(self, word: str) -> List[str]:
        symbols = list(word) + [_EOW]
        while len(symbols) > 1:
            best_rank = None
            best_idx = -1
            for i in range(len(symbols) - 1):
                rank = self._ranks.get((symbols[i], symbols[i + 1]))
                if rank is not None and (best_rank is None or rank < best_rank):
                    best_rank = rank
                    best_idx = i
            if best_rank is None:
                break
            merged = symbols[best_idx] + symbols[best_idx + 1]
            symbols = symbols[:best_idx] + [merged] + symbols[best_idx + 2 :]
        return symbols

    def encode_word(self, word: str) -> Tuple[int, ...]:
        cached = self._cache.get(word)
        if cached is not None:
            return cached
        ids = tuple(
            self.token_to_id.get(sym, self.unk_id) for sym in self._merge_word(word)
        )
        self._cache[word] = ids
        return ids

    def encode(self, text: str) -> List[int]:
        """Encode whitespace-separated text; no special tokens are added."""
        ids: List[int] = []
        for word in text.split():
            ids.extend(self.encode_word(word))
        return ids

    def decode(self, ids: Iterable[int]) -> str:
        """Inverse of encode for plain text; special tokens render literally."""
        parts: List[str] = []
        for i in ids:
            if not 0 <= i < len(self.tokens):
                raise ValidationError(f"token id {i} out of range")
            tok = self.tokens[i]
            if tok == PAD:
                continue
            parts.append(tok)
        text = "".join(parts).replace(_EOW, " ")
        # Specials carry no end-of-word marker; keep them space-separated.
        for sp in SPECIAL_TOKENS:
            text = text.replace(sp, f" {sp} ")
        return " ".join(text.split())


def train_subword_vocab(
    texts: Iterable[str], vocab_size: int, min_pair_frequency: int = 2
) -> SubwordVocab:
    """Learn a subword vocabulary of at most ``vocab_size`` tokens.

    Merging stops early when no symbol pair reaches ``min_pair_frequency``.
    """
    word_freq: Dict[Tuple[str, ...], int] = {}
    alphabet = set()
    n_words = 0
    for text in texts:
        for word in text.split():
            n_words += 1
            key = tuple(word) + (_EOW,)
            word_freq[key] = word_freq.get(key, 0) + 1
            alphabet.update(word)
    if n_words == 0:
        raise ValidationError("cannot train a vocabulary on empty text")

    base_tokens = list(SPECIAL_TOKENS) + sorted(alphabet) + [_EOW]
    if vocab_size < len(base_tokens):
        raise ValidationError(
            f"vocab_size {vocab_size} is below the {len(base_tokens)} "
            "tokens needed for specials plus the alphabet"
        )

    words = {k: list(k) for k in word_freq}
    merges: List[Tuple[str, str]] = []
    tokens = list(base_tokens)
    while len(tokens) < vocab_size:
        pair_counts: Dict[Tuple[str, str], int] = {}
        for key, symbols in words.items():
            freq = word_freq[key]
            for i in range(len(symbols) - 1):
                pair = (symbols[i], symbols[i + 1])
                pair_counts[pair] = pair_counts.get(pair, 0) + freq
        if not pair_counts:
            break
        # Deterministic choice: highest count, then lexicographically first.
        best = min(pair_counts.items(), key=lambda kv: (-kv[1], kv[0]))
        (a, b), count = best
        if count < min_pair_frequency:
            break
        merges.append((a, b))
        merged = a + b
        tokens.append(merged)
        for key, symbols in words.items():
            i = 0
            out = []
            while i < len(symbols):
                if i + 1 < len(symbols) and symbols[i] == a and symbols[i + 1] == b:
                    out.append(merged)
                    i += 2
                else:
                    out.append(symbols[i])
                    i += 1
            words[key] = out
    return SubwordVocab(tokens=tokens, merges=merges)


def save_vocab(vocab: SubwordVocab, path: Path) -> None:
    lines = ["# deauville-vocab/1"]
    lines.extend(f"token\t{t}" for t in vocab.tokens)
    lines.extend(f"merge\t{a}\t{b}" for a, b in vocab.merges)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_vocab(path: Path) -> SubwordVocab:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"vocab file not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != "# deauville-vocab/1":
        raise ValidationError(f"{path}: not a vocab file")
    tokens: List[str] = []
    merges: List[Tuple[str, str]] = []
    for ln, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if parts[0] == "token" and len(parts) == 2:
            tokens.append(parts[1])
        elif parts[0] == "merge" and len(parts) == 3:
            merges.append((parts[1], parts[2]))
        else:
            raise ValidationError(f"{path}:{ln}: unparseable vocab line")
    return SubwordVocab(tokens=tokens, merges=merges)
