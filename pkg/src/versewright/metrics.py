"""Lyric quality metrics: diversity, keyword coverage, BLEU, crop detection, stress alignment.

Raw metric functions are strict about their inputs; ``evaluate`` is the lenient
aggregator that marks a metric not-applicable (None) instead of failing when
its prerequisites are missing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cache
from importlib import resources

from .errors import InputFormatError
from .melody import ConstraintSet
from .multitask import success_rate
from .phonetics import Lexicon, count_syllables_word, tokenize

BLEU_SENTENCE = "sentence"
BLEU_CORPUS = "corpus"
_MAX_BLEU_ORDER = 4


class AlignmentError(InputFormatError):
    """Candidate lines do not line up with the constraint grid."""


@cache
def dangling_words() -> frozenset[str]:
    """Function words that signal a cropped line when they end it."""
    text = resources.files("versewright").joinpath("data", "dangling_words.txt").read_text("utf-8")
    return frozenset(w for w in text.split() if w and not w.startswith("#"))


def _line_tokens(line: str) -> list[str]:
    return [tok.casefold() for tok in tokenize(line)]


def distinct_n(lines: list[str], n: int) -> float | None:
    """Unique n-grams over total n-grams, n-grams taken within lines and pooled across them."""
    if n < 1:
        raise InputFormatError(f"n must be >= 1, got {n}")
    seen: set[tuple[str, ...]] = set()
    total = 0
    for line in lines:
        tokens = _line_tokens(line)
        for i in range(len(tokens) - n + 1):
            seen.add(tuple(tokens[i : i + n]))
            total += 1
    if total == 0:
        return None
    return len(seen) / total


def salient_coverage(lines: list[str], salient: list[str]) -> float:
    """Fraction of the requested salient words that appear anywhere in the lyric."""
    if not salient:
        raise InputFormatError("salient word list is empty")
    present: set[str] = set()
    for line in lines:
        present.update(_line_tokens(line))
    wanted = [w.casefold() for w in salient]
    return sum(w in present for w in wanted) / len(wanted)


def _ngram_counts(tokens: list[str], n: int) -> dict[tuple[str, ...], int]:
    counts: dict[tuple[str, ...], int] = {}
    for i in range(len(tokens) - n + 1):
        gram = tuple(tokens[i : i + n])
        counts[gram] = counts.get(gram, 0) + 1
    return counts


def _clipped_matches(cand: list[str], ref: list[str], n: int) -> tuple[int, int]:
    cand_counts = _ngram_counts(cand, n)
    ref_counts = _ngram_counts(ref, n)
    matched = sum(min(count, ref_counts.get(gram, 0)) for gram, count in cand_counts.items())
    return matched, max(0, len(cand) - n + 1)


def bleu(candidate_lines: list[str], reference_lines: list[str], mode: str = BLEU_SENTENCE) -> float:
    """BLEU-4 between aligned line pairs.

    Sentence mode averages per-line scores, add-one-smoothing only the
    zero-match precisions (so a text scores exactly 1.0 against itself) and
    capping the n-gram order at the candidate length. Corpus mode pools
    counts unsmoothed.
    """
    if mode not in (BLEU_SENTENCE, BLEU_CORPUS):
        raise InputFormatError(f"unknown BLEU mode: {mode!r}")
    if len(candidate_lines) != len(reference_lines):
        raise InputFormatError(
            f"candidate has {len(candidate_lines)} lines, reference has {len(reference_lines)}"
        )
    if not candidate_lines:
        raise InputFormatError("BLEU requires at least one line pair")
    pairs = [(_line_tokens(c), _line_tokens(r)) for c, r in zip(candidate_lines, reference_lines)]

    if mode == BLEU_SENTENCE:
        scores = []
        for cand, ref in pairs:
            if not cand and not ref:
                continue
            if not cand or not ref:
                scores.append(0.0)
                continue
            max_order = min(_MAX_BLEU_ORDER, len(cand))
            log_sum = 0.0
            for n in range(1, max_order + 1):
                matched, total = _clipped_matches(cand, ref, n)
                precision = matched / total if matched > 0 else 1.0 / (total + 1)
                log_sum += math.log(precision)
            brevity = 1.0 if len(cand) >= len(ref) else math.exp(1.0 - len(ref) / len(cand))
            scores.append(brevity * math.exp(log_sum / max_order))
        if not scores:
            raise InputFormatError("BLEU requires at least one non-empty line pair")
        return sum(scores) / len(scores)

    matched_total = [0] * _MAX_BLEU_ORDER
    count_total = [0] * _MAX_BLEU_ORDER
    cand_length = 0
    ref_length = 0
    for cand, ref in pairs:
        cand_length += len(cand)
        ref_length += len(ref)
        for n in range(1, _MAX_BLEU_ORDER + 1):
            matched, total = _clipped_matches(cand, ref, n)
            matched_total[n - 1] += matched
            count_total[n - 1] += total
    log_sum = 0.0
    orders = 0
    for matched, total in zip(matched_total, count_total):
        if total == 0:
            continue
        if matched == 0:
            return 0.0
        log_sum += math.log(matched / total)
        orders += 1
    if orders == 0 or cand_length == 0:
        return 0.0
    brevity = 1.0 if cand_length >= ref_length else math.exp(1.0 - ref_length / cand_length)
    return brevity * math.exp(log_sum / orders)


def cropped_ratio(lines: list[str], dangling: frozenset[str] | None = None) -> float | None:
    """Fraction of lines ending on a dangling function word (a sign the line was cut short)."""
    dangling = dangling if dangling is not None else dangling_words()
    considered = 0
    cropped = 0
    for line in lines:
        tokens = _line_tokens(line)
        if not tokens:
            continue
        considered += 1
        cropped += tokens[-1] in dangling
    if considered == 0:
        return None
    return cropped / considered


def stress_duration_pct(
    lexicon: Lexicon, lines: list[str], constraints: ConstraintSet
) -> float | None:
    """Percentage of polysyllabic dictionary-word syllables whose stress matches slot duration.

    Each word is matched against its best-aligning pronunciation of the right
    length. Monosyllables and out-of-vocabulary words carry no stress signal
    and are excluded; all-monosyllable lyrics return None. Lines must match
    their budgets exactly.
    """
    if len(lines) != len(constraints.budgets):
        raise AlignmentError(
            f"{len(lines)} lines do not cover {len(constraints.budgets)} phrases"
        )
    matched = 0
    counted = 0
    for index, (line, budget) in enumerate(zip(lines, constraints.budgets), start=1):
        rhythm = constraints.rhythm[index - 1]
        cursor = 0
        for token in tokenize(line):
            count, source = count_syllables_word(lexicon, token)
            if cursor + count > budget:
                raise AlignmentError(
                    f"line {index} overruns its budget of {budget} syllables"
                )
            if source == "dictionary" and count >= 2:
                window = rhythm[cursor : cursor + count]
                best = 0
                for pronunciation in lexicon.lookup(token):
                    pattern = pronunciation.stress_pattern
                    if len(pattern) != count:
                        continue
                    best = max(best, sum(p == w for p, w in zip(pattern, window)))
                matched += best
                counted += count
            cursor += count
        if cursor != budget:
            raise AlignmentError(
                f"line {index} has {cursor} syllables but the budget is {budget}"
            )
    if counted == 0:
        return None
    return 100.0 * matched / counted


@dataclass(frozen=True)
class EvalReport:
    """One evaluation pass; None marks a metric that was not applicable."""

    num_lines: int
    distinct_1: float | None
    distinct_2: float | None
    salient_coverage: float | None
    bleu_sentence: float | None
    cropped_ratio: float | None
    stress_duration_pct: float | None
    success_rate: float | None

    def to_dict(self) -> dict:
        return {
            "num_lines": self.num_lines,
            "distinct_1": self.distinct_1,
            "distinct_2": self.distinct_2,
            "salient_coverage": self.salient_coverage,
            "bleu_sentence": self.bleu_sentence,
            "cropped_ratio": self.cropped_ratio,
            "stress_duration_pct": self.stress_duration_pct,
            "success_rate": self.success_rate,
        }

    def format_table(self) -> str:
        rows = []
        for name, value in self.to_dict().items():
            if value is None:
                rendered = "n/a"
            elif isinstance(value, float):
                rendered = f"{value:.4f}"
            else:
                rendered = str(value)
            rows.append(f"{name:<20} {rendered}")
        return "\n".join(rows)


def evaluate(
    lexicon: Lexicon,
    candidate_lines: list[str],
    reference_lines: list[str] | None = None,
    salient: list[str] | None = None,
    constraints: ConstraintSet | None = None,
) -> EvalReport:
    """Run every applicable metric over one candidate lyric."""
    if not candidate_lines:
        raise InputFormatError("no candidate lines to evaluate")
    coverage = salient_coverage(candidate_lines, salient) if salient else None
    bleu_score = (
        bleu(candidate_lines, reference_lines, BLEU_SENTENCE) if reference_lines else None
    )
    stress: float | None = None
    success: float | None = None
    if constraints is not None:
        budgets = list(constraints.budgets)
        success = success_rate(lexicon, candidate_lines, budgets)
        try:
            stress = stress_duration_pct(lexicon, candidate_lines, constraints)
        except AlignmentError:
            stress = None
    return EvalReport(
        num_lines=len(candidate_lines),
        distinct_1=distinct_n(candidate_lines, 1),
        distinct_2=distinct_n(candidate_lines, 2),
        salient_coverage=coverage,
        bleu_sentence=bleu_score,
        cropped_ratio=cropped_ratio(candidate_lines),
        stress_duration_pct=stress,
        success_rate=success,
    )
