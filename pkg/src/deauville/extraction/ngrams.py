"""Context n-gram mining around a (possibly misspelled) trigger term.

The miner is a discovery aid: rank the n-grams that co-occur with a term so
a human can extend the mention grammar with styles they had not anticipated.
Digit tokens and spelled-out scores are abstracted to "#" so "score of 3"
and "score of 5" count as the same pattern.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass

from ..errors import ValidationError
from .grammar import DEFAULT_NUMBER_WORDS, levenshtein

_WORD_RE = re.compile(r"[A-Za-z]+|\d+")


@dataclass
class NgramReport:
    term: str
    window: int
    entries: list[tuple[str, int]]


def _abstract(token: str) -> str:
    low = token.lower()
    if low.isdigit() or low in DEFAULT_NUMBER_WORDS:
        return "#"
    return low


def _is_term(token: str, term: str, max_edit_distance: int) -> bool:
    low = token.lower()
    if low == term:
        return True
    if len(term) < 6 or max_edit_distance == 0:
        return False
    return low[:3] == term[:3] and levenshtein(low, term, max_edit_distance) <= max_edit_distance


def mine_context_ngrams(
    corpus,
    term: str,
    n_range: tuple[int, int] = (2, 6),
    window: int = 3,
    max_edit_distance: int = 2,
) -> NgramReport:
    """Frequency-ranked n-grams found within ``window`` tokens of ``term``.

    ``corpus`` is a list of ReportDocument-like objects with indication,
    findings, and impression text attributes; sections are scanned
    independently so n-grams never cross a section boundary. With window=0
    only n-grams overlapping the trigger token itself are counted.
    """
    if not term:
        raise ValidationError("term must be non-empty")
    if not corpus:
        raise ValidationError("corpus must be non-empty")
    n_lo, n_hi = n_range
    if n_lo < 1 or n_hi < n_lo:
        raise ValidationError(f"invalid n_range {n_range}")
    if window < 0:
        raise ValidationError("window must be non-negative")

    term = term.lower()
    counts: Counter[str] = Counter()
    for doc in corpus:
        for text in (doc.indication, doc.findings, doc.impression):
            tokens = _WORD_RE.findall(text)
            hits = [i for i, tok in enumerate(tokens) if _is_term(tok, term, max_edit_distance)]
            if not hits:
                continue
            abstracted = [_abstract(t) for t in tokens]
            for n in range(n_lo, n_hi + 1):
                for i in range(len(tokens) - n + 1):
                    # qualify when some trigger occurrence is within `window`
                    # tokens of the n-gram span [i, i+n)
                    if any(i - window <= h <= i + n - 1 + window for h in hits):
                        counts[" ".join(abstracted[i:i + n])] += 1
    entries = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return NgramReport(term=term, window=window, entries=entries)
