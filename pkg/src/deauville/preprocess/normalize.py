"""Report text normalization.

The pipeline is lowercase, date removal, decimal rounding, punctuation
stripping (decimal points inside numbers survive), synonym folding, and
whitespace collapse, applied in that order.  The composition is idempotent:
normalizing already-normalized text is a no-op, which the tests check.
"""

import re
from dataclasses import dataclass, field
from decimal import Decimal, ROUND_HALF_UP
from typing import Tuple

from ..errors import ValidationError

_MONTHS = (
    "january|february|march|april|may|june|july|august|september|october|november|december"
)

_DATE_PATTERNS = [
    re.compile(r"\b\d{1,2}/\d{1,2}/\d{2,4}\b"),
    re.compile(r"\b\d{4}-\d{1,2}-\d{1,2}\b"),
    re.compile(rf"\b\d{{1,2}} (?:{_MONTHS}) \d{{4}}\b"),
    re.compile(rf"\b(?:{_MONTHS}) \d{{1,2}},? \d{{4}}\b"),
]

_DECIMAL_RE = re.compile(r"\b(\d+)\.(\d+)\b")

# Remove every character that is not word, whitespace, or dot; dots are
# handled separately so "7.2" keeps its point while sentence periods go.
_PUNCT_RE = re.compile(r"[^\w\s.]|_")
_LOOSE_DOT_RE = re.compile(r"(?<!\d)\.|\.(?!\d)")

DEFAULT_SYNONYM_MAP: Tuple[Tuple[str, str], ...] = (
    ("standardized uptake value", "suvmax"),
    ("suv max", "suvmax"),
    ("suv", "suvmax"),
    ("pet ct", "petct"),
    ("fdg avid", "fdgavid"),
    ("follow up", "followup"),
)

_WS_RE = re.compile(r"\s+")


@dataclass(frozen=True)
class NormalizationConfig:
    strip_punctuation: bool = True
    strip_dates: bool = True
    round_numbers_to: int = 1
    synonym_map: Tuple[Tuple[str, str], ...] = DEFAULT_SYNONYM_MAP

    def __post_init__(self):
        if self.round_numbers_to < 0:
            raise ValidationError("round_numbers_to must be >= 0")
        variants = {v for v, _ in self.synonym_map}
        for _, canonical in self.synonym_map:
            if canonical in variants:
                raise ValidationError(
                    f"synonym map is cyclic: canonical {canonical!r} is also a variant"
                )

    def synonym_patterns(self):
        # Longer variants first so "suv max" folds before the bare "suv".
        ordered = sorted(self.synonym_map, key=lambda pair: -len(pair[0]))
        return [(re.compile(rf"\b{re.escape(v)}\b"), c) for v, c in ordered]


DEFAULT_NORMALIZATION = NormalizationConfig()


def _make_rounder(places: int):
    quantum = Decimal(1).scaleb(-places)

    def _round(match: "re.Match[str]") -> str:
        return str(Decimal(match.group(0)).quantize(quantum, rounding=ROUND_HALF_UP))

    return _round


def normalize(text: str, config: NormalizationConfig = DEFAULT_NORMALIZATION) -> str:
    """Normalize dictated report text for tokenization."""
    out = text.lower()
    if config.strip_dates:
        for pat in _DATE_PATTERNS:
            out = pat.sub(" ", out)
    out = _DECIMAL_RE.sub(_make_rounder(config.round_numbers_to), out)
    if config.strip_punctuation:
        out = _PUNCT_RE.sub(" ", out)
        out = _LOOSE_DOT_RE.sub(" ", out)
    for pat, repl in config.synonym_patterns():
        out = pat.sub(repl, out)
    return _WS_RE.sub(" ", out).strip()
