"""Keyword planning: extract salient words from lyrics and lay out a per-line keyword plan.

The plan prompt format is byte-stable because it doubles as training-data input
(see multitask) and as the generation context handed to external models.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import InputFormatError
from .phonetics import Lexicon, stopwords, tokenize

_MIN_CONTENT_LETTERS = 3
_COOC_WINDOW = 4
_SEGMENT_SPLIT = re.compile(r";\s+(?=Line \d+:)")
_SEGMENT_SHAPE = re.compile(r"^Line (\d+): (\d+) syllables; Keywords:(.*)$")


class PlanError(InputFormatError):
    """Plan cannot be built or parsed."""


def is_content_word(token: str) -> bool:
    """Content words drive salience and co-occurrence: ≥3 letters, not a stopword."""
    folded = token.casefold()
    return sum(ch.isalpha() for ch in folded) >= _MIN_CONTENT_LETTERS and folded not in stopwords()


def _content_tokens(line: str) -> list[str]:
    return [tok.casefold() for tok in tokenize(line) if is_content_word(tok)]


def extract_salient(lyrics: str, k: int) -> list[str]:
    """Top-k content words scored by term frequency × first-position weight (earlier = higher).

    The weight for a word first seen at token index i out of N total tokens is
    (2N − i) / 2N, so frequency dominates and early mentions break the balance.
    Ties are resolved lexicographically. Fewer than k words are returned when
    the text is short; no content words yields an empty list.
    """
    if k < 1:
        raise InputFormatError(f"k must be >= 1, got {k}")
    tokens = [tok.casefold() for tok in tokenize(lyrics)]
    if not tokens:
        return []
    frequency: dict[str, int] = {}
    first_index: dict[str, int] = {}
    for index, token in enumerate(tokens):
        if not is_content_word(token):
            continue
        frequency[token] = frequency.get(token, 0) + 1
        first_index.setdefault(token, index)
    total = len(tokens)
    scored = sorted(
        frequency,
        key=lambda w: (-(frequency[w] * (2 * total - first_index[w]) / (2 * total)), w),
    )
    return scored[:k]


class CooccurrenceTable:
    """Symmetric content-word co-occurrence counts within a ±4 content-word window."""

    def __init__(self, counts: dict[str, dict[str, int]] | None = None) -> None:
        self._counts = counts or {}

    @classmethod
    def build(cls, corpus: str) -> CooccurrenceTable:
        counts: dict[str, dict[str, int]] = {}
        for line in corpus.splitlines():
            content = _content_tokens(line)
            for i, word in enumerate(content):
                for j in range(max(0, i - _COOC_WINDOW), min(len(content), i + _COOC_WINDOW + 1)):
                    other = content[j]
                    if i == j or other == word:
                        continue
                    bucket = counts.setdefault(word, {})
                    bucket[other] = bucket.get(other, 0) + 1
        return cls(counts)

    def count(self, word: str, other: str) -> int:
        return self._counts.get(word, {}).get(other, 0)

    def top_fills(self, seeds: list[str], exclude: set[str], lexicon: Lexicon | None = None) -> list[str]:
        """Candidate fill words ranked by total co-occurrence with the seeds, ties lexicographic."""
        scores: dict[str, int] = {}
        for seed in seeds:
            for other, count in self._counts.get(seed.casefold(), {}).items():
                if other in exclude:
                    continue
                if lexicon is not None and not lexicon.lookup(other):
                    continue
                scores[other] = scores.get(other, 0) + count
        return sorted(scores, key=lambda w: (-scores[w], w))

    def to_dict(self) -> dict:
        return {w: dict(sorted(others.items())) for w, others in sorted(self._counts.items())}

    @classmethod
    def from_dict(cls, payload: dict) -> CooccurrenceTable:
        return cls({w: {o: int(c) for o, c in others.items()} for w, others in payload.items()})


@dataclass(frozen=True)
class GenerationRequest:
    """What the caller wants written: topic words plus the plan shape."""

    title: str
    salient_words: tuple[str, ...]
    num_lines: int
    keywords_per_line: int = 1
    genre: str = ""

    def __post_init__(self) -> None:
        deduped: list[str] = []
        for word in self.salient_words:
            folded = word.casefold()
            if folded and folded not in deduped:
                deduped.append(folded)
        if not deduped:
            raise InputFormatError("salient_words must contain at least one word")
        object.__setattr__(self, "salient_words", tuple(deduped))
        if self.num_lines < 1:
            raise InputFormatError(f"num_lines must be >= 1, got {self.num_lines}")
        if self.keywords_per_line < 1:
            raise InputFormatError(f"keywords_per_line must be >= 1, got {self.keywords_per_line}")


@dataclass(frozen=True)
class Plan:
    """Ordered per-line keyword lists."""

    lines: tuple[tuple[str, ...], ...]

    @property
    def num_lines(self) -> int:
        return len(self.lines)

    def all_keywords(self) -> list[str]:
        return [word for line in self.lines for word in line]


def make_plan(
    request: GenerationRequest,
    lexicon: Lexicon | None = None,
    cooccurrence: CooccurrenceTable | None = None,
) -> Plan:
    """Distribute salient words round-robin across lines, then fill remaining slots.

    Fill words come from the co-occurrence table, ranked by affinity with the
    already-placed keywords; the plan never repeats a word.
    """
    capacity = request.num_lines * request.keywords_per_line
    if len(request.salient_words) > capacity:
        raise PlanError(
            f"{len(request.salient_words)} salient words exceed {capacity} plan slots"
        )
    lines: list[list[str]] = [[] for _ in range(request.num_lines)]
    target = 0
    for word in request.salient_words:
        while len(lines[target % request.num_lines]) >= request.keywords_per_line:
            target += 1
        lines[target % request.num_lines].append(word)
        target += 1

    placed = set(request.salient_words)
    needed = capacity - len(placed)
    if needed:
        fills: list[str] = []
        if cooccurrence is not None:
            fills = cooccurrence.top_fills(list(placed), exclude=set(placed), lexicon=lexicon)
        unfilled: list[str] = []
        fill_cursor = 0
        for line_index, line in enumerate(lines):
            while len(line) < request.keywords_per_line:
                if fill_cursor < len(fills):
                    line.append(fills[fill_cursor])
                    fill_cursor += 1
                else:
                    unfilled.append(f"line {line_index + 1} slot {len(line) + 1}")
                    line.append("")  # placeholder; rejected below
        if unfilled:
            raise PlanError("vocabulary too small to fill plan slots: " + ", ".join(unfilled))
    return Plan(tuple(tuple(line) for line in lines))


def render_plan(plan: Plan, budgets: tuple[int, ...] | list[int]) -> str:
    """Byte-stable prompt: "Line i: B syllables; Keywords: k1, k2" segments joined by "; "."""
    if len(budgets) != plan.num_lines:
        raise PlanError(
            f"budget count {len(budgets)} does not match plan line count {plan.num_lines}"
        )
    segments = []
    for index, (keywords, budget) in enumerate(zip(plan.lines, budgets), start=1):
        keyword_text = f" {', '.join(keywords)}" if keywords else ""
        segments.append(f"Line {index}: {budget} syllables; Keywords:{keyword_text}")
    return "; ".join(segments)


def parse_plan_text(text: str) -> tuple[Plan, tuple[int, ...]]:
    """Inverse of render_plan for plan files."""
    text = text.strip()
    if not text:
        raise PlanError("empty plan text")
    lines: list[tuple[str, ...]] = []
    budgets: list[int] = []
    for expected, segment in enumerate(_SEGMENT_SPLIT.split(text), start=1):
        match = _SEGMENT_SHAPE.match(segment.strip())
        if not match:
            raise PlanError(f"unparseable plan segment: {segment!r}")
        number, budget, keyword_text = match.groups()
        if int(number) != expected:
            raise PlanError(f"plan segment out of order: expected Line {expected}, got Line {number}")
        keywords = tuple(k.strip() for k in keyword_text.split(",") if k.strip())
        lines.append(keywords)
        budgets.append(int(budget))
    return Plan(tuple(lines)), tuple(budgets)
