"""Deterministic synthetic corpus generation."""

from typing import Dict, List, Optional, Tuple

import numpy as np

from ..errors import ValidationError
from . import templates as T
from .images import IntensityAnchors, render_scan
from .records import CorpusSpec, ExamRecord, ReportDocument

# Fixed stream tags keep per-exam randomness decoupled from corpus size.
_EXAM_STREAM = 104729


def _exam_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, _EXAM_STREAM, index))))


def _sample_class(weights: Dict[int, float], rng: np.random.Generator) -> int:
    labels = sorted(weights)
    probs = np.array([weights[k] for k in labels], dtype=np.float64)
    return int(rng.choice(labels, p=probs))


def _style_mix(spec: CorpusSpec) -> Tuple[List[str], np.ndarray]:
    mix = spec.mention_style_mix or T.DEFAULT_MENTION_STYLE_MIX
    unknown = set(mix) - set(T.MENTION_STYLES)
    if unknown:
        raise ValidationError(f"unknown mention styles in mix: {sorted(unknown)}")
    styles = sorted(mix)
    probs = np.array([mix[s] for s in styles], dtype=np.float64)
    return styles, probs / probs.sum()


def _fill(template: str, score: int, style: T.DictatorStyle, rng: np.random.Generator) -> str:
    out = template
    if "{site}" in out:
        out = out.replace("{site}", T.pick(T.SITES, rng))
    if "{suvterm}" in out:
        out = out.replace("{suvterm}", style.suvterm)
    if "{suv}" in out:
        out = out.replace("{suv}", T.sample_suv(score, rng))
    return out


def _indication(style: T.DictatorStyle, rng: np.random.Generator) -> str:
    tpl = T.pick(T.INDICATION_TEMPLATES, rng)
    sent = tpl.format(
        lymphoma=T.pick(T.LYMPHOMAS, rng),
        cycles=int(rng.integers(2, 7)),
        regimen=T.pick(T.REGIMENS, rng),
    )
    sent = sent[0].upper() + sent[1:]
    if rng.random() < 0.3:
        y, m, d = T.sample_date(rng)
        sent += f" Therapy completed {T.format_date(style.date_format_idx, y, m, d)}."
    return sent


def _findings(
    score: int,
    style: T.DictatorStyle,
    rng: np.random.Generator,
    extra_mentions: List[Tuple[str, int]],
) -> str:
    bank = T.FINDINGS_BANK[score]
    allowed = list(style.findings_choices[score])
    n_class = min(len(allowed), 2 + int(rng.integers(0, 2)))
    chosen = rng.choice(len(allowed), size=n_class, replace=False)
    sentences = [_fill(bank[allowed[int(i)]], score, style, rng) for i in chosen]

    if rng.random() < style.comparison_rate:
        y, m, d = T.sample_date(rng)
        date = T.format_date(style.date_format_idx, y, m, d)
        sentences.append(T.pick(T.COMPARISON_TEMPLATES, rng).format(date=date))

    n_distract = 1 + int(rng.integers(0, 3))
    picks = rng.choice(len(T.DISTRACTOR_SENTENCES), size=n_distract, replace=False)
    sentences.extend(T.DISTRACTOR_SENTENCES[int(i)] for i in picks)

    if score >= 2 and rng.random() < 0.2:
        sentences.append(T.pick(T.RESOLVED_SENTENCES, rng))

    for mention_style, mention_score in extra_mentions:
        site = T.pick(T.SITES, rng)
        sentences.append(T.findings_mention_sentence(mention_style, mention_score, site, rng))

    order = rng.permutation(len(sentences))
    return " ".join(sentences[int(i)] for i in order)


def _impression(
    score: int,
    style: T.DictatorStyle,
    rng: np.random.Generator,
    mention_style: Optional[str],
) -> str:
    bank = T.IMPRESSION_BANK[score]
    allowed = list(style.impression_choices[score])
    n_summary = 1 + int(rng.integers(0, 2))
    chosen = rng.choice(len(allowed), size=min(n_summary, len(allowed)), replace=False)
    sentences = [_fill(bank[allowed[int(i)]], score, style, rng) for i in chosen]
    if mention_style is not None:
        sentences.append(T.mention_sentence(mention_style, score, rng))
    if rng.random() < style.closing_rate:
        sentences.append(T.pick(T.CLOSING_SENTENCES, rng))
    return " ".join(sentences)


def generate_exam(
    spec: CorpusSpec,
    styles: List[T.DictatorStyle],
    index: int,
    anchors: Optional[IntensityAnchors] = None,
) -> Tuple[ExamRecord, Dict]:
    """Generate one exam plus planting metadata (styles and scores used)."""
    rng = _exam_rng(spec.seed, index)
    score = _sample_class(spec.normalized_class_weights(), rng)
    style = styles[int(rng.integers(len(styles)))]
    labeled = rng.random() >= spec.unlabeled_fraction

    mention_styles, mention_probs = _style_mix(spec)
    planted: List[Tuple[str, int]] = []
    extra: List[Tuple[str, int]] = []
    primary_style: Optional[str] = None
    if labeled:
        primary_style = mention_styles[int(rng.choice(len(mention_styles), p=mention_probs))]
        planted.append((primary_style, score))
        if rng.random() < 0.25:
            for _ in range(1 + int(rng.integers(0, 2))):
                s = mention_styles[int(rng.choice(len(mention_styles), p=mention_probs))]
                extra_score = int(rng.integers(1, score + 1))
                extra.append((s, extra_score))
            planted.extend(extra)

    report = ReportDocument(
        indication=_indication(style, rng),
        findings=_findings(score, style, rng, extra),
        impression=_impression(score, style, rng, primary_style),
    )

    image = None
    if spec.with_images:
        image, _ = render_scan(score, spec.image_size, rng, anchors=anchors)

    y, m, d = T.sample_date(rng)
    record = ExamRecord(
        exam_id=f"exam{index:05d}",
        report=report,
        label=score if labeled else None,
        dictator_id=style.dictator_id,
        exam_date=f"{y:04d}-{m:02d}-{d:02d}",
        image=image,
    )
    meta = {
        "hidden_class": score,
        "planted_mentions": [{"style": s, "score": sc} for s, sc in planted],
    }
    return record, meta


def generate_corpus(
    spec: CorpusSpec, with_metadata: bool = False
) -> "List[ExamRecord] | Tuple[List[ExamRecord], List[Dict]]":
    """Generate the full corpus for a spec.

    Generation is keyed on ``(seed, exam index)``, so the same spec always
    yields byte-identical records regardless of platform or corpus size.
    """
    styles = T.make_dictator_styles(spec.n_dictators, spec.seed)
    records: List[ExamRecord] = []
    metas: List[Dict] = []
    for index in range(spec.n_exams):
        record, meta = generate_exam(spec, styles, index)
        records.append(record)
        metas.append(meta)
    if with_metadata:
        return records, metas
    return records


def corpus_stats(records: List[ExamRecord]) -> Dict:
    """Summary counts for a corpus: class, dictator, and image coverage."""
    if not records:
        raise ValidationError("corpus is empty")
    class_counts = {str(k): 0 for k in range(1, 6)}
    unlabeled = 0
    dictators: Dict[str, int] = {}
    n_images = 0
    for rec in records:
        if rec.label is None:
            unlabeled += 1
        else:
            class_counts[str(rec.label)] += 1
        dictators[rec.dictator_id] = dictators.get(rec.dictator_id, 0) + 1
        if rec.image is not None:
            n_images += 1
    return {
        "n_exams": len(records),
        "class_counts": class_counts,
        "n_unlabeled": unlabeled,
        "n_labeled": len(records) - unlabeled,
        "dictator_counts": dict(sorted(dictators.items())),
        "n_images": n_images,
    }


def generate_generic_texts(n_texts: int, seed: int = 0) -> List[str]:
    """Out-of-domain English paragraphs for generic pretraining."""
    if n_texts <= 0:
        raise ValidationError("n_texts must be positive")
    texts = []
    for index in range(n_texts):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, 15485863, index))))
        n_sentences = 4 + int(rng.integers(0, 5))
        texts.append(" ".join(T.render_generic_sentence(rng) for _ in range(n_sentences)))
    return texts
