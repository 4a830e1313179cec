"""Shared fixtures.

The expensive ones (corpus, vocabulary) are session-scoped; tests treat
them as read-only.
"""

import pytest

from deauville.corpus.generator import generate_corpus, generate_generic_texts
from deauville.corpus.records import CorpusSpec
from deauville.extraction import default_grammar
from deauville.preprocess import normalize, train_subword_vocab


@pytest.fixture(scope="session")
def grammar():
    return default_grammar()


@pytest.fixture(scope="session")
def small_corpus():
    spec = CorpusSpec(n_exams=150, seed=7, unlabeled_fraction=0.2, image_size=(32, 32))
    return generate_corpus(spec)


@pytest.fixture(scope="session")
def tiny_vocab():
    texts = [normalize(t) for t in generate_generic_texts(250, seed=5)]
    return train_subword_vocab(texts, 350)
