from pathlib import Path

import pytest

from nullscan import frontend

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"


def corpus_files():
    return sorted(CORPUS.glob("**/*.bof"))


def load_corpus(name: str):
    return frontend.load((CORPUS / name).read_text())


@pytest.fixture
def example():
    return load_corpus("running_example_core.bof")
