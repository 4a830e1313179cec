from .grammar import PatternGrammar, Template, default_grammar, load_grammar, save_grammar
from .mentions import (
    DsMention,
    assign_exam_label,
    find_mentions,
    label_report,
    redact,
    redact_report,
)
from .ngrams import NgramReport, mine_context_ngrams

__all__ = [
    "PatternGrammar",
    "Template",
    "default_grammar",
    "load_grammar",
    "save_grammar",
    "DsMention",
    "find_mentions",
    "assign_exam_label",
    "label_report",
    "redact",
    "redact_report",
    "NgramReport",
    "mine_context_ngrams",
]
