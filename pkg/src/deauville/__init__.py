"""Deauville score pipeline: synthetic corpus, mention extraction, tokenization,
tiny transformer encoders with masked-LM domain adaptation, text/vision/multimodal
classifiers, and Monte Carlo cross-validation benchmarks."""

__version__ = "0.1.0"
