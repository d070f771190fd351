"""Pronouncing-lexicon parsing plus syllable, stress, and syllabification queries.

The lexicon file follows the standard pronouncing-dictionary conventions:
one ``WORD  PHONEMES`` entry per line (two-space separator), ``;;;`` comment
lines, and ``WORD(n)`` suffixes for alternate pronunciations. Vowel phonemes
carry stress digits 0/1/2; digits 1 and 2 both count as stressed.
"""

from __future__ import annotations

import functools
import logging
import os
import re
from dataclasses import dataclass
from importlib import resources
from typing import Iterator, NamedTuple

from .errors import InputFormatError

logger = logging.getLogger(__name__)

ARPABET_VOWELS = frozenset({
    "AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER", "EY",
    "IH", "IY", "OW", "OY", "UH", "UW",
})
ARPABET_CONSONANTS = frozenset({
    "B", "CH", "D", "DH", "F", "G", "HH", "JH", "K", "L", "M", "N",
    "NG", "P", "R", "S", "SH", "T", "TH", "V", "W", "Y", "Z", "ZH",
})

LEXICON_PATH_ENV = "VERSEWRIGHT_LEXICON"

_COMMENT_PREFIX = ";;;"
_VARIANT_SUFFIX = re.compile(r"\(\d+\)$")
_EDGE_PUNCT = re.compile(r"^[^A-Za-z0-9]+|[^A-Za-z0-9]+$")
_PHONE_TOKEN = re.compile(r"^([A-Z]{1,2})([0-2]?)$")


class NonLexicalTokenError(InputFormatError):
    """Token contains no letters yet is not pure punctuation (e.g. a bare number)."""


class LexiconParseError(InputFormatError):
    """Lexicon text could not be ingested at all."""


@dataclass(frozen=True)
class PhonemeSymbol:
    """One ARPAbet phoneme; stress digit present iff the symbol is a vowel."""

    symbol: str
    stress: int | None = None

    @property
    def is_vowel(self) -> bool:
        return self.symbol in ARPABET_VOWELS

    @classmethod
    def parse(cls, token: str) -> PhonemeSymbol:
        match = _PHONE_TOKEN.match(token)
        if not match:
            raise InputFormatError(f"invalid phoneme token {token!r}")
        symbol, digit = match.groups()
        if symbol in ARPABET_VOWELS:
            if not digit:
                raise InputFormatError(f"vowel phoneme {token!r} missing stress digit")
            return cls(symbol, int(digit))
        if symbol not in ARPABET_CONSONANTS:
            raise InputFormatError(f"unknown phoneme symbol {token!r}")
        if digit:
            raise InputFormatError(f"consonant phoneme {token!r} carries a stress digit")
        return cls(symbol)

    def __str__(self) -> str:
        return self.symbol if self.stress is None else f"{self.symbol}{self.stress}"


@dataclass(frozen=True)
class Pronunciation:
    """Ordered phoneme sequence for one way of saying a word."""

    phonemes: tuple[PhonemeSymbol, ...]

    @property
    def syllable_count(self) -> int:
        return sum(1 for p in self.phonemes if p.is_vowel)

    @property
    def stress_pattern(self) -> tuple[int, ...]:
        # Binary reading of the dictionary's ternary digits: 1 and 2 are stressed.
        return tuple(1 if p.stress in (1, 2) else 0 for p in self.phonemes if p.is_vowel)

    def __str__(self) -> str:
        return " ".join(str(p) for p in self.phonemes)


class Lexicon:
    """Immutable word → pronunciations mapping with case-insensitive lookup."""

    def __init__(self, entries: dict[str, tuple[Pronunciation, ...]], malformed_count: int = 0):
        self._entries = entries
        self.malformed_count = malformed_count

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, word: str) -> bool:
        return bool(self.lookup(word))

    def words(self) -> Iterator[str]:
        return iter(self._entries)

    def lookup(self, word: str) -> tuple[Pronunciation, ...]:
        """All pronunciations for a surface token; empty tuple signals OOV."""
        folded = fold_token(word)
        if not folded:
            return ()
        return self._entries.get(folded, ())


def fold_token(word: str) -> str:
    """Strip leading/trailing non-alphanumerics (keeping internal apostrophes) and case-fold."""
    return _EDGE_PUNCT.sub("", word).casefold()


def tokenize(line: str) -> list[str]:
    """Whitespace tokenization; hyphenated words split into parts; edge punctuation stripped."""
    tokens: list[str] = []
    for raw in line.split():
        for part in raw.split("-"):
            cleaned = _EDGE_PUNCT.sub("", part)
            if cleaned:
                tokens.append(cleaned)
    return tokens


def parse_lexicon(text: str) -> Lexicon:
    """Parse pronouncing-dictionary text; malformed lines are counted and skipped."""
    if not text.strip():
        raise LexiconParseError("empty lexicon text")
    entries: dict[str, list[Pronunciation]] = {}
    malformed = 0
    for line in text.splitlines():
        if not line.strip() or line.startswith(_COMMENT_PREFIX):
            continue
        head, sep, tail = line.partition("  ")
        phones = tail.split()
        if not sep or not head.strip() or not phones:
            malformed += 1
            continue
        try:
            phonemes = tuple(PhonemeSymbol.parse(tok) for tok in phones)
        except InputFormatError:
            malformed += 1
            continue
        pron = Pronunciation(phonemes)
        if pron.syllable_count == 0:
            malformed += 1
            continue
        word = _VARIANT_SUFFIX.sub("", head.strip()).casefold()
        entries.setdefault(word, []).append(pron)
    if malformed:
        logger.debug("skipped %d malformed lexicon lines", malformed)
    return Lexicon({w: tuple(ps) for w, ps in entries.items()}, malformed_count=malformed)


def load_lexicon(path: str | os.PathLike[str] | None = None) -> Lexicon:
    """Load a lexicon from a path, the VERSEWRIGHT_LEXICON env var, or the bundled file."""
    if path is None:
        path = os.environ.get(LEXICON_PATH_ENV)
    if path is None:
        return _bundled_lexicon()
    with open(path, encoding="utf-8") as fh:
        return parse_lexicon(fh.read())


def _data_text(name: str) -> str:
    return resources.files("versewright").joinpath("data", name).read_text(encoding="utf-8")


@functools.cache
def _bundled_lexicon() -> Lexicon:
    return parse_lexicon(_data_text("lexicon.txt"))


@functools.cache
def legal_onsets() -> frozenset[str]:
    """Space-joined consonant clusters permitted to open a syllable."""
    onsets = {""}
    for line in _data_text("onsets.txt").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            onsets.add(line)
    return frozenset(onsets)


@functools.cache
def stopwords() -> frozenset[str]:
    return frozenset(
        line.strip().casefold()
        for line in _data_text("stopwords.txt").splitlines()
        if line.strip() and not line.startswith("#")
    )


def estimate_syllables(word: str) -> int:
    """Orthographic syllable estimate for OOV words: vowel-letter clusters, silent-e aware, minimum 1."""
    letters = re.sub(r"[^a-z]", "", word.casefold())
    if not letters:
        return 1
    vowels = "aeiouy"
    count = 0
    previous_vowel = False
    for index, char in enumerate(letters):
        is_vowel = char in vowels and not (char == "y" and index == 0)
        if is_vowel and not previous_vowel:
            count += 1
        previous_vowel = is_vowel
    if (
        count > 1
        and letters.endswith("e")
        and len(letters) >= 2
        and letters[-2] not in vowels
        and not (len(letters) >= 3 and letters.endswith("le") and letters[-3] not in vowels)
    ):
        count -= 1
    return max(count, 1)


class SyllableCount(NamedTuple):
    count: int
    source: str  # "dictionary" | "estimated"


def count_syllables_word(lexicon: Lexicon, word: str) -> SyllableCount:
    """Syllable count for one token; the first-listed pronunciation is canonical."""
    folded = fold_token(word)
    if not folded:
        raise NonLexicalTokenError(f"non-lexical token: {word!r}")
    if not any(ch.isalpha() for ch in folded):
        raise NonLexicalTokenError(f"non-lexical token: {word!r}")
    pronunciations = lexicon.lookup(folded)
    if pronunciations:
        return SyllableCount(pronunciations[0].syllable_count, "dictionary")
    return SyllableCount(estimate_syllables(folded), "estimated")


def count_syllables_line(lexicon: Lexicon, line: str) -> int:
    """Total syllables over a whitespace-tokenized line; pure punctuation is skipped."""
    return sum(count_syllables_word(lexicon, token).count for token in tokenize(line))


class WordStress(NamedTuple):
    """Stress marks for one token within a line: marks is None when the word is OOV."""

    word: str
    start: int  # first syllable slot index within the line
    count: int
    source: str  # "dictionary" | "estimated"
    marks: tuple[int, ...] | None


class LineStress(NamedTuple):
    marks: tuple[int, ...]  # concatenated dictionary-word marks only
    spans: tuple[WordStress, ...]


def stress_pattern_line(lexicon: Lexicon, line: str) -> LineStress:
    """Concatenated binary stress for a line; OOV words appear as unknown spans, not marks."""
    marks: list[int] = []
    spans: list[WordStress] = []
    cursor = 0
    for token in tokenize(line):
        count, source = count_syllables_word(lexicon, token)
        pronunciations = lexicon.lookup(token)
        if pronunciations:
            word_marks = pronunciations[0].stress_pattern
            marks.extend(word_marks)
            spans.append(WordStress(token, cursor, count, source, word_marks))
        else:
            spans.append(WordStress(token, cursor, count, source, None))
        cursor += count
    return LineStress(tuple(marks), tuple(spans))


def syllabify(pronunciation: Pronunciation) -> list[list[PhonemeSymbol]]:
    """Split phonemes into syllables by maximal onset against the shipped legal-onset table.

    Each group contains exactly one vowel; concatenating the groups reproduces
    the input phoneme sequence.
    """
    onsets = legal_onsets()
    syllables: list[list[PhonemeSymbol]] = []
    pending: list[PhonemeSymbol] = []  # consonants seen since the last vowel
    for phoneme in pronunciation.phonemes:
        if not phoneme.is_vowel:
            pending.append(phoneme)
            continue
        split = 0
        for candidate in range(len(pending) + 1):
            split = candidate
            onset = " ".join(p.symbol for p in pending[candidate:])
            if onset in onsets or not syllables:
                break
        if syllables:
            syllables[-1].extend(pending[:split])
            syllables.append(pending[split:] + [phoneme])
        else:
            syllables.append(pending + [phoneme])
        pending = []
    if pending:
        if not syllables:
            raise InputFormatError("pronunciation has no vowel phoneme")
        syllables[-1].extend(pending)
    return syllables


def syllable_strings(pronunciation: Pronunciation) -> list[str]:
    """Syllables as stress-free concatenated symbol strings, e.g. river → ['RIH', 'VER']."""
    return ["".join(p.symbol for p in group) for group in syllabify(pronunciation)]
