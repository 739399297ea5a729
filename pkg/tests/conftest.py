import pathlib

import pytest

from tripass.kasiski import extract_letters

DATA_DIR = pathlib.Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def corpus_text() -> str:
    return (DATA_DIR / "corpus.txt").read_text()


@pytest.fixture(scope="session")
def corpus_letters(corpus_text) -> str:
    return extract_letters(corpus_text)
