"""Mention detection, exam-level labeling by the max rule, and redaction."""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import ValidationError
from .grammar import RANGE, SCORE, TRIGGER, PatternGrammar, Template

_TOKEN_RE = re.compile(r"[A-Za-z]+|\d+|[^\w\s]")
_RANGE_SEPS = {"-", "–"}


@dataclass(frozen=True)
class DsMention:
    """One detected Deauville-score mention."""

    span: tuple[int, int]
    score: int
    pattern_id: str
    surface: str


def _tokenize(text: str) -> list[tuple[str, int, int]]:
    return [(m.group(0), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def _match_template(
    tpl: Template,
    tokens: list[tuple[str, int, int]],
    start: int,
    grammar: PatternGrammar,
) -> tuple[int, list[int]] | None:
    """Try to match ``tpl`` at token index ``start``.

    Returns (tokens consumed, scores) or None. RANGE consumes three tokens
    and yields every score in the inclusive range.
    """
    i = start
    scores: list[int] = []
    for atom in tpl.atoms:
        if atom == RANGE:
            if i + 2 >= len(tokens):
                return None
            lo = grammar.score_of_token(tokens[i][0])
            if lo is None or not tokens[i][0].isdigit():
                return None
            if tokens[i + 1][0] not in _RANGE_SEPS:
                return None
            hi = grammar.score_of_token(tokens[i + 2][0])
            if hi is None or not tokens[i + 2][0].isdigit() or hi < lo:
                return None
            scores.extend(range(lo, hi + 1))
            i += 3
        elif atom == SCORE:
            if i >= len(tokens):
                return None
            value = grammar.score_of_token(tokens[i][0])
            if value is None:
                return None
            scores.append(value)
            i += 1
        elif atom == TRIGGER:
            if i >= len(tokens) or not grammar.is_trigger(tokens[i][0]):
                return None
            i += 1
        else:
            if i >= len(tokens) or tokens[i][0].lower() != atom:
                return None
            i += 1
    return i - start, scores


def find_mentions(text: str, grammar: PatternGrammar) -> list[DsMention]:
    """Detect all non-overlapping mentions, leftmost-longest, case-insensitive.

    The winner at each position is the longest match; among equal-length
    matches the lexicographically smallest pattern id wins, so the result
    does not depend on template list order.
    """
    tokens = _tokenize(text)
    mentions: list[DsMention] = []
    i = 0
    while i < len(tokens):
        best: tuple[int, str, list[int]] | None = None
        for tpl in grammar.templates:
            m = _match_template(tpl, tokens, i, grammar)
            if m is None:
                continue
            consumed, scores = m
            if best is None or consumed > best[0] or (consumed == best[0] and tpl.id < best[1]):
                best = (consumed, tpl.id, scores)
        if best is None:
            i += 1
            continue
        consumed, pattern_id, scores = best
        span = (tokens[i][1], tokens[i + consumed - 1][2])
        surface = text[span[0]:span[1]]
        for score in scores:
            mentions.append(DsMention(span=span, score=score, pattern_id=pattern_id, surface=surface))
        i += consumed
    return mentions


def assign_exam_label(mentions: list[DsMention]) -> int | None:
    """Exam-level label is the highest mentioned score; None when no mentions."""
    if not mentions:
        return None
    return max(m.score for m in mentions)


def redact(text: str, mentions: list[DsMention]) -> str:
    """Replace every mention span with a single space, keeping all other text."""
    spans = sorted({m.span for m in mentions})
    for start, end in spans:
        if not (0 <= start <= end <= len(text)):
            raise ValidationError(f"mention span {(start, end)} out of bounds for text of length {len(text)}")
    out = text
    for start, end in reversed(spans):
        out = out[:start] + " " + out[end:]
    return out


def label_report(report, grammar: PatternGrammar) -> int | None:
    """Exam label from all three report sections via the max rule."""
    mentions: list[DsMention] = []
    for section in (report.indication, report.findings, report.impression):
        mentions.extend(find_mentions(section, grammar))
    return assign_exam_label(mentions)


def redact_report(report, grammar: PatternGrammar):
    """Return a copy of the report with every mention span blanked."""
    from ..corpus.records import ReportDocument

    sections = []
    for section in (report.indication, report.findings, report.impression):
        sections.append(redact(section, find_mentions(section, grammar)))
    return ReportDocument(indication=sections[0], findings=sections[1], impression=sections[2])
