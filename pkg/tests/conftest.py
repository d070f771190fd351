from __future__ import annotations

from pathlib import Path

import pytest

import versewright as vw

ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture(scope="session")
def lexicon() -> vw.Lexicon:
    return vw.load_lexicon()


@pytest.fixture(scope="session")
def corpus_text() -> str:
    return (ROOT / "data" / "lyrics_public_domain.txt").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def trigram(corpus_text: str) -> vw.NGramModel:
    return vw.train_ngram(corpus_text, order=3)


@pytest.fixture(scope="session")
def cooccurrence(corpus_text: str) -> vw.CooccurrenceTable:
    return vw.CooccurrenceTable.build(corpus_text)
