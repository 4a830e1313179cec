"""Classifier input assembly with impression-first truncation."""

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from ..corpus.records import ReportDocument
from ..errors import ValidationError
from .bpe import SubwordVocab

MAX_INPUT_TOKENS = 512


@dataclass(frozen=True)
class TokenSequence:
    """A bounded model input: [START] impression [SEP] findings [SEP].

    ``section_map`` holds half-open index spans into ``ids`` for the kept
    impression and findings tokens; together the spans cover exactly the
    non-special positions.
    """

    ids: Tuple[int, ...]
    section_map: Dict[str, Tuple[int, int]] = field(default_factory=dict)
    limit: int = MAX_INPUT_TOKENS

    def __post_init__(self):
        if len(self.ids) > self.limit:
            raise ValidationError(f"sequence of {len(self.ids)} exceeds limit {self.limit}")
        spans = sorted(self.section_map.values())
        covered = 0
        for i, (lo, hi) in enumerate(spans):
            if not 0 <= lo <= hi <= len(self.ids):
                raise ValidationError(f"section span {(lo, hi)} out of bounds")
            if i and lo < spans[i - 1][1]:
                raise ValidationError("section spans overlap")
            covered += hi - lo
        n_special = len(self.ids) - covered
        if self.section_map and n_special not in (2, 3):
            raise ValidationError("section spans must cover all non-special tokens")

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def n_impression(self) -> int:
        lo, hi = self.section_map.get("impression", (0, 0))
        return hi - lo

    @property
    def n_findings(self) -> int:
        lo, hi = self.section_map.get("findings", (0, 0))
        return hi - lo


def assemble_input(
    impression_ids: List[int],
    findings_ids: List[int],
    start_id: int,
    sep_id: int,
    limit: int = MAX_INPUT_TOKENS,
) -> TokenSequence:
    """Assemble a sequence from already-encoded section token ids.

    The impression always gets the budget first; findings fill whatever
    remains in document order.  With findings present the layout is
    ``[START] imp [SEP] fnd [SEP]`` (impression cap ``limit - 3``); with
    no findings it is ``[START] imp [SEP]`` (cap ``limit - 2``).
    """
    if limit < 8:
        raise ValidationError("limit must be at least 8")
    if not findings_ids:
        imp = impression_ids[: limit - 2]
        ids = [start_id] + list(imp) + [sep_id]
        return TokenSequence(
            ids=tuple(ids),
            section_map={"impression": (1, 1 + len(imp))},
            limit=limit,
        )
    imp = impression_ids[: limit - 3]
    budget = limit - 3 - len(imp)
    fnd = findings_ids[:budget]
    ids = [start_id] + list(imp) + [sep_id] + list(fnd) + [sep_id]
    return TokenSequence(
        ids=tuple(ids),
        section_map={
            "impression": (1, 1 + len(imp)),
            "findings": (2 + len(imp), 2 + len(imp) + len(fnd)),
        },
        limit=limit,
    )


def build_input(
    report: ReportDocument, vocab: SubwordVocab, limit: int = MAX_INPUT_TOKENS
) -> TokenSequence:
    """Encode a normalized, redacted report into a bounded TokenSequence."""
    imp = vocab.encode(report.impression)
    fnd = vocab.encode(report.findings)
    return assemble_input(imp, fnd, vocab.start_id, vocab.sep_id, limit=limit)
