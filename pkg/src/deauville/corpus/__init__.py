from .records import (
    CorpusSpec,
    DeauvilleLabel,
    ExamRecord,
    GrayscaleImage,
    ReportDocument,
)
from .generator import corpus_stats, generate_corpus, generate_generic_texts
from .images import IntensityAnchors, ScanLayout, generate_image, render_scan
from .io import load_corpus, load_manifest, load_pgm, save_corpus, save_pgm

__all__ = [
    "CorpusSpec",
    "DeauvilleLabel",
    "ExamRecord",
    "GrayscaleImage",
    "ReportDocument",
    "IntensityAnchors",
    "ScanLayout",
    "generate_image",
    "render_scan",
    "generate_corpus",
    "generate_generic_texts",
    "corpus_stats",
    "save_corpus",
    "load_corpus",
    "load_manifest",
    "save_pgm",
    "load_pgm",
]
