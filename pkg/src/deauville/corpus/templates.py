"""Text banks for synthetic PET/CT report generation.

Every score mention emitted here uses a phrasing that the default
extraction grammar recognizes; the round trip from planted label to
extracted label is exercised by the test suite.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..errors import ValidationError

NUMBER_WORDS = {1: "one", 2: "two", 3: "three", 4: "four", 5: "five"}

TRIGGER_MISSPELLINGS = ["Deauvile", "Deuville", "Duaville", "Dauville"]

# Mention phrasing styles.  Ids are stable; the corpus spec's style mix is
# keyed on them and the manifest records the styles planted per exam.
MENTION_STYLES = [
    "score_of",
    "score",
    "bare",
    "on_scale",
    "scale_score_of",
    "criteria_score",
    "criteria_score_of",
    "category",
    "word_score_of",
    "word_on_scale",
    "score_of_on_scale",
    "range",
    "misspelled_score_of",
    "misspelled_bare",
]

DEFAULT_MENTION_STYLE_MIX: Dict[str, float] = {
    "score_of": 0.30,
    "score": 0.10,
    "bare": 0.05,
    "on_scale": 0.09,
    "scale_score_of": 0.04,
    "criteria_score": 0.04,
    "criteria_score_of": 0.04,
    "category": 0.04,
    "word_score_of": 0.06,
    "word_on_scale": 0.03,
    "score_of_on_scale": 0.05,
    "range": 0.06,
    "misspelled_score_of": 0.06,
    "misspelled_bare": 0.04,
}

# Styles whose rendered text starts with the score rather than the trigger
# word; they take different sentence wrappers.
_SCORE_FIRST_STYLES = {"on_scale", "word_on_scale", "score_of_on_scale"}


def render_mention(style: str, score: int, rng: np.random.Generator) -> str:
    """Render the bare mention text (no sentence wrapper) for a style."""
    if style not in MENTION_STYLES:
        raise ValidationError(f"unknown mention style {style!r}")
    if score not in NUMBER_WORDS:
        raise ValidationError(f"score must be in 1..5, got {score!r}")
    if style == "score_of":
        return f"Deauville score of {score}"
    if style == "score":
        return f"Deauville score {score}"
    if style == "bare":
        return f"Deauville {score}"
    if style == "on_scale":
        return f"{score} on the Deauville scale"
    if style == "scale_score_of":
        return f"Deauville scale score of {score}"
    if style == "criteria_score":
        return f"Deauville criteria score {score}"
    if style == "criteria_score_of":
        return f"Deauville criteria score of {score}"
    if style == "category":
        return f"Deauville category {score}"
    if style == "word_score_of":
        return f"Deauville score of {NUMBER_WORDS[score]}"
    if style == "word_on_scale":
        return f"{NUMBER_WORDS[score]} on the Deauville scale"
    if style == "score_of_on_scale":
        return f"score of {score} on the Deauville scale"
    if style == "range":
        # A range like "3-4" labels the exam with its maximum.  Score 1
        # cannot anchor a range, so fall back to the plain phrasing.
        if score < 2:
            return f"Deauville score of {score}"
        return f"Deauville score of {score - 1}-{score}"
    misspelling = TRIGGER_MISSPELLINGS[int(rng.integers(len(TRIGGER_MISSPELLINGS)))]
    if style == "misspelled_score_of":
        return f"{misspelling} score of {score}"
    if style == "misspelled_bare":
        return f"{misspelling} {score}"
    raise ValidationError(f"unhandled mention style {style!r}")


_TRIGGER_FIRST_WRAPPERS = [
    "{m}.",
    "Findings are consistent with {m}.",
    "Assessment: {m}.",
    "Overall impression: {m}.",
    "Response assessment: {m}.",
]

_SCORE_FIRST_WRAPPERS = [
    "The dominant lesion is rated {m}.",
    "Response is rated {m}.",
    "Findings correspond to a {m}.",
    "This represents a {m}.",
    "Treatment response is scored {m}.",
]

_FINDINGS_MENTION_WRAPPERS = [
    "The {site} corresponds to {m}.",
    "This focus is rated {m}.",
    "The {site} is scored {m}.",
]


def mention_sentence(style: str, score: int, rng: np.random.Generator) -> str:
    """Wrap a rendered mention into a full impression sentence."""
    m = render_mention(style, score, rng)
    if style in _SCORE_FIRST_STYLES:
        wrappers = _SCORE_FIRST_WRAPPERS
    else:
        wrappers = _TRIGGER_FIRST_WRAPPERS
    sentence = wrappers[int(rng.integers(len(wrappers)))].format(m=m)
    return sentence[0].upper() + sentence[1:]


def findings_mention_sentence(
    style: str, score: int, site: str, rng: np.random.Generator
) -> str:
    m = render_mention(style, score, rng)
    tpl = _FINDINGS_MENTION_WRAPPERS[int(rng.integers(len(_FINDINGS_MENTION_WRAPPERS)))]
    sentence = tpl.format(m=m, site=site)
    return sentence[0].upper() + sentence[1:]


SITES = [
    "right cervical lymph node",
    "left axillary nodal mass",
    "anterior mediastinal mass",
    "splenic lesion",
    "right inguinal node",
    "para-aortic nodal conglomerate",
    "left supraclavicular node",
    "retroperitoneal adenopathy",
    "hepatic hilar node",
    "right iliac chain node",
    "left cervical nodal station",
    "subcarinal node",
]

LYMPHOMAS = [
    "Hodgkin lymphoma",
    "diffuse large B-cell lymphoma",
    "follicular lymphoma",
    "mantle cell lymphoma",
    "marginal zone lymphoma",
]

REGIMENS = ["ABVD", "R-CHOP", "BR", "ICE"]

SUV_TERMS = ["SUVmax", "SUV max", "SUV", "standardized uptake value"]

# Per-class SUV sampling ranges.  Adjacent classes overlap on purpose so
# the number alone does not fully determine the class.
SUV_RANGES = {2: (0.9, 2.0), 3: (1.6, 3.4), 4: (2.9, 7.5), 5: (5.5, 17.0)}

INDICATION_TEMPLATES = [
    "Restaging of {lymphoma}.",
    "{lymphoma}; assessment of treatment response after {cycles} cycles of {regimen}.",
    "Follow-up PET/CT for {lymphoma}.",
    "Interim response assessment for {lymphoma} on {regimen}.",
    "History of {lymphoma} status post chemotherapy.",
    "Evaluation of residual disease in {lymphoma}.",
]

# Findings sentence banks keyed by score.  Classes 2..5 describe the same
# anatomy with graded reference-organ comparisons, so neighboring classes
# share most of their vocabulary.  Each class also carries interval-change
# phrasings that quote ANOTHER grade inside a past or negated frame
# ("previously markedly avid ... has resolved"), so grade keywords alone do
# not identify the class; the surrounding construction does.
FINDINGS_BANK: Dict[int, List[str]] = {
    1: [
        "No abnormal FDG uptake is identified in the neck, chest, abdomen, or pelvis.",
        "Previously noted activity in the {site} has resolved completely.",
        "There is no focus of increased tracer activity above blood pool background.",
        "No hypermetabolic lesions are seen on the current survey.",
        "Physiologic tracer distribution without focal abnormality.",
        "All previously hypermetabolic sites now show activity at background levels.",
        "No residual metabolic activity within the treated {site}.",
        "Complete metabolic resolution of the {site} disease.",
        "No suspicious focal uptake throughout the imaged volume.",
        "The previously markedly avid {site} now shows no uptake above background.",
        "Formerly intense hypermetabolism in the {site} has resolved without residual activity.",
        "No residual uptake in the {site}, which previously measured well above the liver.",
        "Interval resolution of the moderately increased activity in the {site}; none remains.",
        "Uptake that had exceeded hepatic levels in the {site} is no longer present.",
    ],
    2: [
        "Faint residual activity in the {site}, below mediastinal blood pool.",
        "Minimal uptake at the treated {site}, less intense than the mediastinum.",
        "The {site} shows faint tracer activity lower than mediastinal background, {suvterm} {suv}.",
        "Residual uptake in the {site} is less intense than the mediastinal blood pool.",
        "Low-grade activity in the {site} that does not reach mediastinal levels.",
        "Subtle uptake persists in the {site}, remaining below the mediastinum.",
        "The treated {site} demonstrates activity under the mediastinal reference.",
        "Mild tracer localization in the {site}, {suvterm} {suv}, below blood pool.",
        "Uptake in the {site} has decreased markedly and now sits below mediastinal blood pool.",
        "The previously intensely hypermetabolic {site} shows only faint activity beneath the mediastinum.",
        "Formerly moderate uptake in the {site} has fallen under the mediastinal reference.",
        "Interval decrease in the {site}; activity no longer reaches the mediastinum.",
        "Activity in the {site}, once well above the liver, is now less than blood pool.",
    ],
    3: [
        "Residual uptake in the {site} exceeds the mediastinum but remains below the liver.",
        "The {site} shows activity greater than mediastinal blood pool yet not above hepatic background, {suvterm} {suv}.",
        "Moderate tracer activity in the {site}, above the mediastinum and not above the liver.",
        "Persistent uptake in the {site} is intermediate between mediastinum and liver.",
        "The treated {site} demonstrates uptake above blood pool but below hepatic activity.",
        "Uptake in the {site} is higher than the mediastinum while staying within hepatic levels.",
        "The {site} measures {suvterm} {suv}, between mediastinal and hepatic reference values.",
        "Mildly avid {site}, greater than the mediastinum, not exceeding the liver.",
        "Uptake in the {site} is no longer markedly increased, now above the mediastinum yet below the liver.",
        "The previously intense {site} has improved; current activity stays within hepatic levels but above blood pool.",
        "Formerly faint activity in the {site} has risen and now exceeds the mediastinum without surpassing the liver.",
        "Interval decrease from markedly avid disease; the {site} remains above mediastinal background and under hepatic uptake.",
        "Activity in the {site} has declined from moderately above the liver to between mediastinum and hepatic levels.",
    ],
    4: [
        "Uptake in the {site} is moderately increased compared to the liver, {suvterm} {suv}.",
        "The {site} demonstrates activity moderately above hepatic background.",
        "Persistent hypermetabolism in the {site}, moderately exceeding the liver.",
        "Residual uptake in the {site} is moderately higher than the hepatic reference.",
        "The {site} remains avid with uptake moderately greater than the liver.",
        "Moderately increased tracer activity at the {site} relative to hepatic levels, {suvterm} {suv}.",
        "FDG activity in the {site} is moderately elevated over the liver.",
        "The treated {site} shows moderate residual uptake above the hepatic pool.",
        "Uptake in the {site} is no longer markedly increased but still exceeds the liver moderately.",
        "Interval decrease from intense hypermetabolism; the {site} remains moderately above hepatic background.",
        "Previously faint activity in the {site} has increased and now lies moderately above the liver.",
        "The {site} has improved from markedly avid, with residual uptake moderately greater than hepatic levels.",
        "Activity once below the mediastinum in the {site} has risen moderately beyond the liver, {suvterm} {suv}.",
    ],
    5: [
        "Uptake in the {site} is markedly increased compared to the liver, {suvterm} {suv}.",
        "The {site} demonstrates intense hypermetabolism markedly above hepatic background.",
        "Markedly avid {site} with activity far exceeding the liver, {suvterm} {suv}.",
        "New intensely hypermetabolic {site} consistent with progressive disease.",
        "The {site} shows markedly elevated tracer activity relative to the liver.",
        "Intense FDG uptake at the {site}, markedly greater than the hepatic reference.",
        "Markedly increased metabolic activity in the {site} with additional new foci.",
        "Residual disease in the {site} with uptake markedly higher than the liver.",
        "Uptake in the {site}, previously faint, has increased markedly and far exceeds the liver.",
        "Interval progression; the formerly moderate {site} is now intensely hypermetabolic, {suvterm} {suv}.",
        "Activity in the {site} that had been below the mediastinum now measures markedly above hepatic levels.",
        "The {site} shows marked interval increase, from near background to well beyond the liver.",
        "Previously resolved disease in the {site} has recurred with intense tracer uptake.",
    ],
}

IMPRESSION_BANK: Dict[int, List[str]] = {
    1: [
        "Complete metabolic response.",
        "No evidence of FDG-avid lymphoma.",
        "Resolution of previously demonstrated hypermetabolic disease.",
        "No residual metabolic activity to suggest viable disease.",
        "Previously markedly avid disease no longer demonstrates any uptake.",
        "Interval resolution; the formerly intense uptake has normalized.",
    ],
    2: [
        "Near-complete metabolic response with faint residual activity below the mediastinum.",
        "Minimal residual uptake, less than mediastinal blood pool.",
        "Favorable response; residual activity does not exceed the mediastinum.",
        "Small focus of low-grade activity below the mediastinal reference.",
        "Marked interval improvement; residual activity now below mediastinal blood pool.",
        "Previously intense disease reduced to faint uptake beneath the mediastinum.",
    ],
    3: [
        "Partial metabolic response with residual activity above the mediastinum but not above the liver.",
        "Residual uptake intermediate between mediastinal and hepatic background.",
        "Indeterminate residual activity, greater than the mediastinum and within hepatic levels.",
        "Persistent uptake above blood pool that does not exceed the liver.",
        "Improved from markedly avid disease; residual activity between mediastinum and liver.",
        "Interval decrease; uptake no longer exceeds the liver though it remains above the mediastinum.",
    ],
    4: [
        "Residual metabolic disease moderately above hepatic background.",
        "Partial response with uptake moderately exceeding the liver.",
        "Persistent hypermetabolic disease, moderately greater than hepatic activity.",
        "Incomplete response; residual uptake moderately above the hepatic reference.",
        "Improved from intense hypermetabolism, yet uptake still moderately exceeds the liver.",
        "Interval decrease, but residual disease remains moderately above hepatic levels.",
    ],
    5: [
        "Metabolically active disease markedly above hepatic background.",
        "Findings consistent with treatment failure or progressive disease.",
        "Intense residual hypermetabolism markedly exceeding the liver.",
        "Progression with new and markedly avid disease.",
        "Interval progression from previously faint activity to markedly increased uptake.",
        "Previously moderate disease now demonstrates intense hypermetabolism.",
    ],
}

DISTRACTOR_SENTENCES = [
    "Physiologic uptake is noted in the brain, myocardium, and urinary tract.",
    "Mild diffuse skeletal activity compatible with marrow stimulation.",
    "Stable small pulmonary nodule without significant FDG avidity.",
    "Degenerative changes in the spine without abnormal tracer uptake.",
    "Symmetric brown fat activity in the supraclavicular regions.",
    "The liver and spleen show homogeneous physiologic tracer distribution.",
    "Mild pharyngeal activity, likely physiologic.",
    "No suspicious osseous lesions are identified.",
    "Renal excretion of tracer is noted bilaterally.",
]

RESOLVED_SENTENCES = [
    "Previously noted splenic uptake has resolved.",
    "Prior hypermetabolic axillary disease is no longer evident.",
    "Earlier cervical nodal activity has normalized.",
]

CLOSING_SENTENCES = [
    "Continued surveillance is recommended.",
    "Clinical correlation is advised.",
    "Follow-up imaging in three months is suggested.",
    "Findings were communicated to the referring service.",
]

COMPARISON_TEMPLATES = [
    "Comparison is made with the prior PET/CT dated {date}.",
    "Comparison: prior study of {date}.",
    "Reference is the baseline examination from {date}.",
]

_MONTH_NAMES = [
    "January", "February", "March", "April", "May", "June",
    "July", "August", "September", "October", "November", "December",
]

N_DATE_FORMATS = 4


def format_date(fmt_idx: int, year: int, month: int, day: int) -> str:
    """Render a calendar date in one of the dictation date styles."""
    if fmt_idx == 0:
        return f"{month}/{day}/{year}"
    if fmt_idx == 1:
        return f"{year:04d}-{month:02d}-{day:02d}"
    if fmt_idx == 2:
        return f"{day} {_MONTH_NAMES[month - 1]} {year}"
    if fmt_idx == 3:
        return f"{_MONTH_NAMES[month - 1]} {day}, {year}"
    raise ValidationError(f"unknown date format index {fmt_idx}")


def sample_date(rng: np.random.Generator) -> Tuple[int, int, int]:
    # Day capped at 28 so every month is valid.
    year = int(rng.integers(2008, 2019))
    month = int(rng.integers(1, 13))
    day = int(rng.integers(1, 29))
    return year, month, day


def sample_suv(score: int, rng: np.random.Generator) -> str:
    lo, hi = SUV_RANGES[score]
    return f"{rng.uniform(lo, hi):.1f}"


@dataclass(frozen=True)
class DictatorStyle:
    """Stable per-dictator phrasing habits."""

    dictator_id: str
    findings_choices: Dict[int, Tuple[int, ...]]
    impression_choices: Dict[int, Tuple[int, ...]]
    date_format_idx: int
    suvterm: str
    comparison_rate: float
    closing_rate: float


def make_dictator_styles(n_dictators: int, seed: int) -> List[DictatorStyle]:
    """Derive ``n_dictators`` deterministic styles from the corpus seed."""
    styles = []
    for idx in range(n_dictators):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, 7919, idx))))
        findings_choices = {}
        impression_choices = {}
        for score in range(1, 6):
            nf = len(FINDINGS_BANK[score])
            k = 4 + int(rng.integers(0, 3))
            findings_choices[score] = tuple(
                sorted(int(i) for i in rng.choice(nf, size=min(k, nf), replace=False))
            )
            ni = len(IMPRESSION_BANK[score])
            impression_choices[score] = tuple(
                sorted(int(i) for i in rng.choice(ni, size=min(3, ni), replace=False))
            )
        styles.append(
            DictatorStyle(
                dictator_id=f"phys{idx:02d}",
                findings_choices=findings_choices,
                impression_choices=impression_choices,
                date_format_idx=int(rng.integers(N_DATE_FORMATS)),
                suvterm=SUV_TERMS[int(rng.integers(len(SUV_TERMS)))],
                comparison_rate=float(rng.uniform(0.3, 0.9)),
                closing_rate=float(rng.uniform(0.2, 0.8)),
            )
        )
    return styles


# General-English sentence bank for the out-of-domain pretraining corpus.
# It shares function words and common morphology with the report bank but
# contains none of the imaging vocabulary.
GENERIC_TEMPLATES = [
    "The committee reviewed the annual report and approved the revised budget.",
    "A light rain fell over the harbor while the ferries waited for clearance.",
    "The library extended its opening hours during the final weeks of term.",
    "Engineers inspected the bridge and found no significant structural changes.",
    "The orchestra rehearsed the second movement before the afternoon break.",
    "Local farmers reported a stronger harvest than in the previous season.",
    "The museum moved its sculpture collection to the renovated east wing.",
    "Several trains were delayed after a signal failure near the junction.",
    "The bakery on the corner sells out of rye bread most mornings.",
    "Volunteers cleared the walking trail after the storm brought down branches.",
    "The council postponed its decision on the new parking regulations.",
    "Students presented their projects during the open evening in the main hall.",
    "The lighthouse keeper recorded calm seas and moderate visibility.",
    "A new edition of the dictionary was published after {n} years of revision.",
    "The expedition covered {n} kilometers before reaching the northern camp.",
    "The factory increased production by a small margin in the second quarter.",
    "Gardeners planted {n} varieties of tulip along the central avenue.",
    "The editor returned the manuscript with detailed comments in the margins.",
    "The chess club meets every Thursday in the room above the cafe.",
    "Workers resurfaced the road between the mill and the old market square.",
    "The weather service forecast light winds and a clear evening sky.",
    "Her latest novel follows a cartographer who never leaves his village.",
    "The airline adjusted its winter schedule to add two morning departures.",
    "A small crowd gathered to watch the restoration of the clock tower.",
    "The laboratory ordered new glassware after the inventory review.",
    "The choir toured three coastal towns during the spring holiday.",
    "Investigators traced the shipment through {n} separate warehouses.",
    "The newspaper printed a correction regarding the festival dates.",
    "Apprentices learn to sharpen their tools before the first lesson.",
    "The valley road closes whenever snow settles on the upper pass.",
    "An updated timetable was posted at the entrance of the station.",
    "The planning office requested further drawings of the proposed annex.",
    "Long queues formed outside the theater before the matinee performance.",
    "The research vessel returned to port for scheduled maintenance.",
    "Shopkeepers decorated their windows ahead of the harvest festival.",
    "The translator compared both versions of the treaty line by line.",
    "A gentle breeze carried the smell of cut grass across the field.",
    "The committee scheduled a second meeting for the end of the month.",
    "Carpenters fitted the last of the shelves in the reading room.",
    "The marathon route passes the fountain and continues along the river.",
]


def render_generic_sentence(rng: np.random.Generator) -> str:
    tpl = GENERIC_TEMPLATES[int(rng.integers(len(GENERIC_TEMPLATES)))]
    if "{n}" in tpl:
        tpl = tpl.format(n=int(rng.integers(2, 40)))
    return tpl


def pick(items: List[str], rng: np.random.Generator) -> str:
    if not items:
        raise ValidationError("cannot pick from an empty list")
    return items[int(rng.integers(len(items)))]
