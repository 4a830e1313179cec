"""Mention-pattern grammar for Deauville score detection.

A grammar is a list of token templates built from four atom kinds:

* a literal word ("score", "of", ...)
* ``TRIGGER``  - the word "deauville" or a recognized misspelling
* ``SCORE``    - a single score token: digit 1-5 or a number word (one..five)
* ``RANGE``    - a hyphenated digit range such as "4-5" (three tokens)

Each template carries exactly one score slot (SCORE or RANGE). Grammars are
serialized to a small human-editable text format, one directive per line.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ValidationError

TRIGGER = "TRIGGER"
SCORE = "SCORE"
RANGE = "RANGE"

_SLOT_ATOMS = (SCORE, RANGE)
_RANGE_SEPARATORS = ("-", "–")  # hyphen and en-dash

DEFAULT_TRIGGER_TERMS = ["deauville", "deauvile", "deuville", "duaville", "dauville"]
DEFAULT_NUMBER_WORDS = {"one": 1, "two": 2, "three": 3, "four": 4, "five": 5}
DEFAULT_FUZZY_PREFIXES = ("deau", "deuv")


@dataclass(frozen=True)
class Template:
    """One mention pattern: an id plus a sequence of atoms."""

    id: str
    atoms: tuple[str, ...]

    def score_slot(self) -> int:
        slots = [i for i, a in enumerate(self.atoms) if a in _SLOT_ATOMS]
        if len(slots) != 1:
            raise ValidationError(
                f"template {self.id!r} must have exactly one score slot, found {len(slots)}"
            )
        return slots[0]


@dataclass
class PatternGrammar:
    """Trigger terms, templates, and fuzzy-match settings for mention detection."""

    trigger_terms: list[str] = field(default_factory=lambda: list(DEFAULT_TRIGGER_TERMS))
    templates: list[Template] = field(default_factory=list)
    number_words: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_NUMBER_WORDS))
    max_edit_distance: int = 2
    fuzzy_prefixes: tuple[str, ...] = DEFAULT_FUZZY_PREFIXES

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if not self.trigger_terms:
            raise ValidationError("grammar needs at least one trigger term")
        if self.max_edit_distance < 0:
            raise ValidationError("max_edit_distance must be non-negative")
        seen: set[str] = set()
        for tpl in self.templates:
            if tpl.id in seen:
                raise ValidationError(f"duplicate template id {tpl.id!r}")
            seen.add(tpl.id)
            tpl.score_slot()
            for atom in tpl.atoms:
                if atom not in (TRIGGER, SCORE, RANGE) and not atom.islower():
                    raise ValidationError(
                        f"template {tpl.id!r}: literal atoms must be lowercase words, got {atom!r}"
                    )
        self._check_unambiguous()

    def _check_unambiguous(self) -> None:
        # Two templates are ambiguous when some token sequence matches both but
        # their score slots sit at different token offsets.
        expanded = [(tpl, _expand_atoms(tpl)) for tpl in self.templates]
        for i, (ta, ea) in enumerate(expanded):
            for tb, eb in expanded[i + 1:]:
                if len(ea) != len(eb):
                    continue
                if ea == eb:
                    raise ValidationError(
                        f"templates {ta.id!r} and {tb.id!r} are identical"
                    )
                compatible = all(
                    _atoms_may_share_token(x, y, self.number_words)
                    for x, y in zip(ea, eb)
                )
                slots_a = [k for k, x in enumerate(ea) if x in _SLOT_ATOMS]
                slots_b = [k for k, x in enumerate(eb) if x in _SLOT_ATOMS]
                if compatible and slots_a != slots_b:
                    raise ValidationError(
                        f"templates {ta.id!r} and {tb.id!r} are ambiguous: "
                        "same shape, score slot in different positions"
                    )

    def is_trigger(self, token: str) -> bool:
        """Case-folded trigger test: exact variant or a close misspelling."""
        low = token.lower()
        if low in self.trigger_terms:
            return True
        if not any(low.startswith(p) for p in self.fuzzy_prefixes):
            return False
        return any(
            levenshtein(low, term, self.max_edit_distance) <= self.max_edit_distance
            for term in self.trigger_terms
        )

    def score_of_token(self, token: str) -> int | None:
        low = token.lower()
        if low.isdigit():
            value = int(low)
            return value if 1 <= value <= 5 else None
        return self.number_words.get(low)


def _expand_atoms(tpl: Template) -> tuple[str, ...]:
    # RANGE occupies three tokens (digit, separator, digit) in the stream.
    out: list[str] = []
    for atom in tpl.atoms:
        if atom == RANGE:
            out.extend((SCORE, "-", SCORE))
        else:
            out.append(atom)
    return tuple(out)


def _atoms_may_share_token(a: str, b: str, number_words: dict[str, int]) -> bool:
    if a == b:
        return True
    score_tokens = {str(d) for d in range(1, 6)} | set(number_words)
    for x, y in ((a, b), (b, a)):
        if x == SCORE and y not in (TRIGGER,) and (y == SCORE or y in score_tokens):
            return True
        if x == TRIGGER and y == TRIGGER:
            return True
    return False


def levenshtein(a: str, b: str, cap: int | None = None) -> int:
    """Plain edit distance with an optional early-exit cap."""
    if a == b:
        return 0
    if cap is not None and abs(len(a) - len(b)) > cap:
        return cap + 1
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        best = i
        for j, cb in enumerate(b, 1):
            cost = 0 if ca == cb else 1
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost))
            best = min(best, cur[-1])
        if cap is not None and best > cap:
            return cap + 1
        prev = cur
    return prev[-1]


_DEFAULT_TEMPLATE_SPECS = [
    ("ds_scale_score_of", (TRIGGER, "scale", "score", "of", SCORE)),
    ("ds_criteria_score_of", (TRIGGER, "criteria", "score", "of", SCORE)),
    ("ds_criteria_score", (TRIGGER, "criteria", "score", SCORE)),
    ("ds_score_of", (TRIGGER, "score", "of", SCORE)),
    ("ds_score", (TRIGGER, "score", SCORE)),
    ("ds_category", (TRIGGER, "category", SCORE)),
    ("ds_bare", (TRIGGER, SCORE)),
    ("on_scale", (SCORE, "on", "the", TRIGGER, "scale")),
    ("score_on_scale", ("score", "of", SCORE, "on", "the", TRIGGER, "scale")),
    ("ds_score_of_range", (TRIGGER, "score", "of", RANGE)),
    ("ds_score_range", (TRIGGER, "score", RANGE)),
    ("ds_range", (TRIGGER, RANGE)),
]


def default_grammar() -> PatternGrammar:
    """Grammar covering the mention styles planted by the synthetic corpus."""
    templates = [Template(tid, atoms) for tid, atoms in _DEFAULT_TEMPLATE_SPECS]
    return PatternGrammar(templates=templates)


def save_grammar(grammar: PatternGrammar, path: str | Path) -> None:
    lines = ["# Deauville mention grammar"]
    lines.append("trigger: " + " ".join(grammar.trigger_terms))
    lines.append(f"max_edit_distance: {grammar.max_edit_distance}")
    lines.append("fuzzy_prefixes: " + " ".join(grammar.fuzzy_prefixes))
    words = " ".join(f"{w}={v}" for w, v in sorted(grammar.number_words.items()))
    lines.append("number_words: " + words)
    for tpl in grammar.templates:
        lines.append(f"template {tpl.id}: " + " ".join(tpl.atoms))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_grammar(path: str | Path) -> PatternGrammar:
    """Parse the key/value + template-list grammar format."""
    trigger_terms: list[str] = []
    templates: list[Template] = []
    number_words: dict[str, int] = {}
    max_edit = 2
    prefixes: tuple[str, ...] = DEFAULT_FUZZY_PREFIXES
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition(":")
        key = key.strip()
        value = value.strip()
        if not _ or not value:
            raise ValidationError(f"malformed grammar line: {raw!r}")
        if key == "trigger":
            trigger_terms = value.split()
        elif key == "max_edit_distance":
            max_edit = int(value)
        elif key == "fuzzy_prefixes":
            prefixes = tuple(value.split())
        elif key == "number_words":
            for pair in value.split():
                word, _, num = pair.partition("=")
                number_words[word] = int(num)
        elif key.startswith("template "):
            tid = key.split(None, 1)[1]
            templates.append(Template(tid, tuple(value.split())))
        else:
            raise ValidationError(f"unknown grammar directive {key!r}")
    if not number_words:
        number_words = dict(DEFAULT_NUMBER_WORDS)
    return PatternGrammar(
        trigger_terms=trigger_terms or list(DEFAULT_TRIGGER_TERMS),
        templates=templates,
        number_words=number_words,
        max_edit_distance=max_edit,
        fuzzy_prefixes=prefixes,
    )
