"""
Fixtures partagées des tests
"""
from pathlib import Path

import pytest

from nlp.models import EvalConfig, Vocabulary
from nlp.vocabulary import build_vocabulary
from preprocessing.text_reader import read_canonical

DATA_DIR = Path(__file__).parent / "data_test"


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def cfg() -> EvalConfig:
    return EvalConfig()


@pytest.fixture
def corpus():
    return read_canonical(DATA_DIR / "corpus.jsonl")


@pytest.fixture
def vocab(corpus, cfg) -> Vocabulary:
    return build_vocabulary(corpus, cfg=cfg)
