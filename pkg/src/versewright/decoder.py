"""Constrained diverse beam search: whole words onto syllable slots, lines exact to budget.

Rhythm handling is soft by default: a word whose stress pattern disagrees with
the slot durations keeps its candidacy but pays log(alpha). With alpha == 0 the
search is hard-constrained and falls back through an explicit relaxation ladder
rather than failing outright; every relaxed placement is logged and counted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import InputFormatError, UnsatisfiableConstraintsError
from .lm import BOUNDARY_TOKEN, RESERVED_TOKENS, Context, Scorer
from .melody import ConstraintSet
from .phonetics import Lexicon, NonLexicalTokenError, count_syllables_word
from .planner import Plan

REJECTED = float("-inf")

OOV_REJECT = "reject"
OOV_PENALIZE = "penalize"

_FULL_VOCABULARY_K = 1_000_000
_SOFTENED_ALPHA = 0.01

STAGE_SOFTEN = "soften"
STAGE_IGNORE = "ignore-rhythm"


@dataclass(frozen=True)
class DecoderConfig:
    alpha: float = 0.01
    beam_width: int = 8
    num_groups: int = 4
    diversity_strength: float = 0.5
    top_k: int = 50
    keyword_boost: float = math.log(4.0)
    oov_policy: str = OOV_PENALIZE
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise InputFormatError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.beam_width < 1 or self.num_groups < 1:
            raise InputFormatError("beam_width and num_groups must be >= 1")
        if self.beam_width % self.num_groups != 0:
            raise InputFormatError(
                f"beam_width {self.beam_width} must be divisible by num_groups {self.num_groups}"
            )
        if self.top_k < 1:
            raise InputFormatError(f"top_k must be >= 1, got {self.top_k}")
        if self.diversity_strength < 0.0:
            raise InputFormatError("diversity_strength must be >= 0")
        if self.oov_policy not in (OOV_REJECT, OOV_PENALIZE):
            raise InputFormatError(f"unknown oov_policy: {self.oov_policy!r}")


def rhythm_satisfied(lexicon: Lexicon, word: str, window: tuple[int, ...] | list[int]) -> bool:
    """True when any pronunciation's stress pattern equals the slot window exactly.

    Monosyllables are exempt (a single slot carries any word); unknown words
    never satisfy. The window length must equal the word's canonical syllable
    count.
    """
    pronunciations = lexicon.lookup(word)
    if not pronunciations:
        return False
    target = tuple(window)
    if len(target) != pronunciations[0].syllable_count:
        raise InputFormatError(
            f"window length {len(target)} does not match syllable count "
            f"{pronunciations[0].syllable_count} for {word!r}"
        )
    if len(target) == 1:
        return True
    return any(p.stress_pattern == target for p in pronunciations)


def adjusted_logprob(logprob: float, satisfied: bool, alpha: float) -> float:
    """Rhythm reweighting: satisfied words keep their score, others pay log(alpha)."""
    if not 0.0 <= alpha <= 1.0:
        raise InputFormatError(f"alpha must be in [0, 1], got {alpha}")
    if satisfied:
        return logprob
    if alpha == 0.0:
        return REJECTED
    return logprob + math.log(alpha)


@dataclass(frozen=True)
class PlacedWord:
    word: str
    phrase_index: int
    start_slot: int
    syllables: int
    source: str  # "dictionary" | "estimated"
    satisfied: bool


@dataclass(frozen=True)
class Relaxation:
    phrase_index: int
    slot_index: int
    word: str
    stage: str  # STAGE_SOFTEN | STAGE_IGNORE


@dataclass(frozen=True)
class Hypothesis:
    """One partial lyric: placed words plus the cursor into the constraint grid."""

    placed: tuple[PlacedWord, ...] = ()
    history: tuple[str, ...] = ()  # words and line boundaries, LM-visible
    phrase: int = 0
    cursor: int = 0
    score: float = 0.0
    violations: int = 0
    relaxations: tuple[Relaxation, ...] = ()
    used_keywords: frozenset[tuple[int, str]] = field(default_factory=frozenset)

    def finished(self, constraints: ConstraintSet) -> bool:
        return self.phrase >= len(constraints.budgets)

    def words(self) -> tuple[str, ...]:
        return tuple(p.word for p in self.placed)


@dataclass(frozen=True)
class LyricResult:
    lines: tuple[str, ...]
    syllable_counts: tuple[int, ...]
    score: float
    violations: int
    relaxations: tuple[Relaxation, ...]
    trace: tuple[dict, ...] | None = None


def _advance(phrase: int, cursor: int, history: tuple[str, ...], budgets: tuple[int, ...]) -> tuple[int, int, tuple[str, ...]]:
    """Roll past completed phrases, emitting one boundary token per finished line."""
    while phrase < len(budgets) and cursor == budgets[phrase]:
        history = history + (BOUNDARY_TOKEN,)
        phrase += 1
        cursor = 0
    return phrase, cursor, history


def _plan_line_map(plan: Plan, constraints: ConstraintSet) -> dict[int, int]:
    """Phrase index → plan line index over the nonzero-budget phrases, in order."""
    active = [i for i, budget in enumerate(constraints.budgets) if budget > 0]
    if len(active) != plan.num_lines:
        raise InputFormatError(
            f"plan has {plan.num_lines} lines but melody has {len(active)} non-rest phrases"
        )
    return {phrase: line for line, phrase in enumerate(active)}


def _start_hypothesis(constraints: ConstraintSet) -> Hypothesis:
    phrase, cursor, history = _advance(0, 0, (), constraints.budgets)
    return Hypothesis(phrase=phrase, cursor=cursor, history=history)


def extend(
    hypothesis: Hypothesis,
    constraints: ConstraintSet,
    model: Scorer,
    lexicon: Lexicon,
    plan: Plan,
    config: DecoderConfig,
) -> list[Hypothesis]:
    """All admissible one-word continuations, produced by the first ladder stage that yields any.

    Ladder: (1) the model's top_k candidates under the configured alpha; (2) the
    full vocabulary under the same alpha; (3) the full vocabulary with alpha
    softened to 0.01; (4) the full vocabulary with rhythm ignored outright.
    Stages 3 and 4 log a relaxation and count a violation for every placement
    that does not satisfy the rhythm. An empty return is a dead end.
    """
    if hypothesis.finished(constraints):
        raise InputFormatError("cannot extend a finished hypothesis")
    plan_lines = _plan_line_map(plan, constraints)
    context = Context(hypothesis.history, line_index=plan_lines[hypothesis.phrase])
    narrow = model.next_candidates(context, config.top_k)
    wide = narrow if len(narrow) < config.top_k else model.next_candidates(context, _FULL_VOCABULARY_K)
    ladder: list[tuple[list, float, bool, str | None]] = [
        (narrow, config.alpha, False, None),
        (wide, config.alpha, False, None),
        (wide, _SOFTENED_ALPHA, False, STAGE_SOFTEN),
        (wide, config.alpha, True, STAGE_IGNORE),
    ]
    for candidates, alpha, ignore_rhythm, stage in ladder:
        extensions = _admissible(
            hypothesis, constraints, lexicon, plan, plan_lines, config,
            candidates, alpha, ignore_rhythm, stage,
        )
        if extensions:
            return extensions
    return []


def _admissible(
    hypothesis: Hypothesis,
    constraints: ConstraintSet,
    lexicon: Lexicon,
    plan: Plan,
    plan_lines: dict[int, int],
    config: DecoderConfig,
    candidates: list,
    alpha: float,
    ignore_rhythm: bool,
    stage: str | None,
) -> list[Hypothesis]:
    phrase = hypothesis.phrase
    remaining = constraints.budgets[phrase] - hypothesis.cursor
    window_row = constraints.rhythm[phrase]
    plan_line = plan_lines[phrase]
    keywords = {k.casefold() for k in plan.lines[plan_line]}
    extensions: list[Hypothesis] = []
    for candidate in candidates:
        word = candidate.word
        if word in RESERVED_TOKENS:
            continue
        try:
            count, source = count_syllables_word(lexicon, word)
        except NonLexicalTokenError:
            continue
        if source == "estimated" and config.oov_policy == OOV_REJECT:
            continue
        if count > remaining:
            continue
        window = window_row[hypothesis.cursor : hypothesis.cursor + count]
        satisfied = source == "dictionary" and rhythm_satisfied(lexicon, word, window)
        adjusted = candidate.logprob if ignore_rhythm else adjusted_logprob(
            candidate.logprob, satisfied, alpha
        )
        if adjusted == REJECTED:
            continue
        folded = word.casefold()
        boosted = folded in keywords and (plan_line, folded) not in hypothesis.used_keywords
        boost = config.keyword_boost if boosted else 0.0
        placed = PlacedWord(word, phrase, hypothesis.cursor, count, source, satisfied)
        relaxations = hypothesis.relaxations
        violations = hypothesis.violations
        if stage is not None and not satisfied:
            relaxations = relaxations + (
                Relaxation(phrase, hypothesis.cursor, word, stage),
            )
            violations += 1
        next_phrase, next_cursor, history = _advance(
            phrase, hypothesis.cursor + count, hypothesis.history + (word,), constraints.budgets
        )
        extensions.append(
            Hypothesis(
                placed=hypothesis.placed + (placed,),
                history=history,
                phrase=next_phrase,
                cursor=next_cursor,
                score=hypothesis.score + adjusted + boost,
                violations=violations,
                relaxations=relaxations,
                used_keywords=(
                    hypothesis.used_keywords | {(plan_line, folded)}
                    if boosted
                    else hypothesis.used_keywords
                ),
            )
        )
    return extensions


def generate(
    plan: Plan,
    constraints: ConstraintSet,
    model: Scorer,
    lexicon: Lexicon,
    config: DecoderConfig | None = None,
    collect_trace: bool = False,
) -> LyricResult:
    """Decode one lyric: every line is budget-exact and made of whole dictionary words.

    Diverse beam search runs ``num_groups`` groups of ``beam_width /
    num_groups`` hypotheses; group g ranks its pool by score minus
    ``diversity_strength`` times how often earlier groups already chose the
    same word this step. Raises UnsatisfiableConstraintsError naming the
    furthest phrase and slot reached when no hypothesis can finish.
    """
    config = config or DecoderConfig()
    _plan_line_map(plan, constraints)  # validates plan/melody agreement up front
    group_size = config.beam_width // config.num_groups
    start = _start_hypothesis(constraints)
    groups: list[list[Hypothesis]] = [[start] for _ in range(config.num_groups)]
    furthest = (start.phrase, start.cursor)
    trace: list[dict] = []
    max_rounds = sum(constraints.budgets) + len(constraints.budgets) + 4

    for round_index in range(max_rounds):
        if all(h.finished(constraints) for beam in groups for h in beam):
            break
        chosen_counts: dict[str, int] = {}
        for group_index, beam in enumerate(groups):
            pool: list[tuple[Hypothesis, str | None]] = []
            for hypothesis in beam:
                if hypothesis.finished(constraints):
                    pool.append((hypothesis, None))
                    continue
                furthest = max(furthest, (hypothesis.phrase, hypothesis.cursor))
                for extension in extend(hypothesis, constraints, model, lexicon, plan, config):
                    pool.append((extension, extension.placed[-1].word))
            pool.sort(
                key=lambda item: (
                    -(
                        item[0].score
                        - (
                            config.diversity_strength * chosen_counts.get(item[1], 0)
                            if item[1] is not None
                            else 0.0
                        )
                    ),
                    item[0].words(),
                )
            )
            selected = pool[:group_size]
            groups[group_index] = [hypothesis for hypothesis, _ in selected]
            for hypothesis, word in selected:
                if word is not None:
                    chosen_counts[word] = chosen_counts.get(word, 0) + 1
            if collect_trace:
                trace.append(
                    {
                        "round": round_index,
                        "group": group_index,
                        "selected": [
                            {"word": word, "score": hypothesis.score}
                            for hypothesis, word in selected
                            if word is not None
                        ],
                    }
                )
    else:
        raise UnsatisfiableConstraintsError(
            "search did not converge", phrase_index=furthest[0], slot_index=furthest[1]
        )

    finished = [h for beam in groups for h in beam if h.finished(constraints)]
    if not finished:
        raise UnsatisfiableConstraintsError(
            f"no admissible word at phrase {furthest[0]}, slot {furthest[1]}",
            phrase_index=furthest[0],
            slot_index=furthest[1],
        )
    best = min(finished, key=lambda h: (-h.score, h.words()))
    lines: list[list[str]] = [[] for _ in constraints.budgets]
    counts = [0] * len(constraints.budgets)
    for placed in best.placed:
        lines[placed.phrase_index].append(placed.word)
        counts[placed.phrase_index] += placed.syllables
    return LyricResult(
        lines=tuple(" ".join(line) for line in lines),
        syllable_counts=tuple(counts),
        score=best.score,
        violations=best.violations,
        relaxations=best.relaxations,
        trace=tuple(trace) if collect_trace else None,
    )
