from __future__ import annotations

import math
import random

import pytest

import versewright as vw
from versewright.decoder import REJECTED, STAGE_SOFTEN

TOY_LEXICON = vw.parse_lexicon(
    """\
SUN  S AH1 N
STAR  S T AA1 R
THE  DH AH0
RIVER  R IH1 V ER0
AGO  AH0 G OW1
GOLDEN  G OW1 L D AH0 N
DELIGHT  D IH0 L AY1 T
"""
)
TOY_WORDS = ["sun", "star", "the", "river", "ago", "golden", "delight"]


class UnigramScorer:
    """Context-free scorer with a fixed logprob per word."""

    def __init__(self, logprobs: dict[str, float]):
        self.logprobs = logprobs

    def next_candidates(self, context: vw.Context, top_k: int) -> list[vw.Candidate]:
        ranked = [vw.Candidate(w, lp) for w, lp in self.logprobs.items()]
        ranked.sort(key=lambda c: (-c.logprob, c.word))
        return ranked[:top_k]

    def sequence_logprob(self, words) -> float:
        return sum(self.logprobs[w] for w in words if w != vw.BOUNDARY_TOKEN)


def single_line_plan(*keywords: str) -> vw.Plan:
    return vw.Plan((tuple(keywords),))


# -- rhythm_satisfied ---------------------------------------------------------


def test_rhythm_satisfied_monosyllables_always_pass():
    assert vw.rhythm_satisfied(TOY_LEXICON, "the", (1,))  # stress 0 vs slot 1: exempt
    assert vw.rhythm_satisfied(TOY_LEXICON, "sun", (0,))


def test_rhythm_satisfied_polysyllables_need_exact_match():
    assert vw.rhythm_satisfied(TOY_LEXICON, "river", (1, 0))
    assert not vw.rhythm_satisfied(TOY_LEXICON, "river", (0, 1))
    assert vw.rhythm_satisfied(TOY_LEXICON, "ago", (0, 1))
    assert not vw.rhythm_satisfied(TOY_LEXICON, "ago", (1, 1))


def test_rhythm_satisfied_accepts_any_listed_pronunciation():
    lexicon = vw.parse_lexicon("RECORD  R EH1 K ER0 D\nRECORD(1)  R IH0 K AO1 R D\n")
    assert vw.rhythm_satisfied(lexicon, "record", (1, 0))
    assert vw.rhythm_satisfied(lexicon, "record", (0, 1))
    assert not vw.rhythm_satisfied(lexicon, "record", (1, 1))


def test_rhythm_satisfied_oov_and_length_mismatch():
    assert not vw.rhythm_satisfied(TOY_LEXICON, "zzz", (1,))
    with pytest.raises(vw.InputFormatError):
        vw.rhythm_satisfied(TOY_LEXICON, "river", (1, 0, 1))


# -- adjusted_logprob ---------------------------------------------------------


def test_adjusted_logprob_contract():
    assert vw.adjusted_logprob(-2.0, True, 0.01) == -2.0
    assert vw.adjusted_logprob(-2.0, False, 1.0) == -2.0
    assert vw.adjusted_logprob(-2.0, False, 0.0) == REJECTED
    assert vw.adjusted_logprob(-2.0, False, 0.01) == pytest.approx(
        -2.0 + math.log(0.01), abs=1e-12
    )
    with pytest.raises(vw.InputFormatError):
        vw.adjusted_logprob(-2.0, False, 1.5)
    with pytest.raises(vw.InputFormatError):
        vw.adjusted_logprob(-2.0, False, -0.1)


# -- exhaustive oracle --------------------------------------------------------


def oracle_search(model, lexicon, plan, constraints, alpha, keyword_boost):
    """Enumerate every budget-exact word sequence, accumulating score exactly as the beam does.

    Returns (best_words, best_score, nodes) where nodes bounds the pool size of
    any beam round, so beam_width >= nodes guarantees the beam prunes nothing.
    """
    budgets = constraints.budgets
    active = [i for i, b in enumerate(budgets) if b > 0]
    plan_lines = {p: i for i, p in enumerate(active)}
    vocabulary = list(model.vocabulary)
    best = None
    nodes = 0

    def advance(phrase, cursor, history):
        while phrase < len(budgets) and cursor == budgets[phrase]:
            history = history + (vw.BOUNDARY_TOKEN,)
            phrase += 1
            cursor = 0
        return phrase, cursor, history

    def recurse(phrase, cursor, history, words, score, used):
        nonlocal best, nodes
        nodes += 1
        phrase, cursor, history = advance(phrase, cursor, history)
        if phrase == len(budgets):
            key = (-score, words)
            if best is None or key < best[0]:
                best = (key, words, score)
            return
        remaining = budgets[phrase] - cursor
        line = plan_lines[phrase]
        keywords = {k.casefold() for k in plan.lines[line]}
        for word in vocabulary:
            pronunciations = lexicon.lookup(word)
            if not pronunciations:
                continue
            count = pronunciations[0].syllable_count
            if count > remaining:
                continue
            window = constraints.rhythm[phrase][cursor : cursor + count]
            satisfied = vw.rhythm_satisfied(lexicon, word, window)
            logprob = model.conditional_logprob(history, word)
            adjusted = vw.adjusted_logprob(logprob, satisfied, alpha)
            if adjusted == REJECTED:
                continue
            folded = word.casefold()
            boosted = folded in keywords and (line, folded) not in used
            bonus = keyword_boost if boosted else 0.0
            recurse(
                phrase,
                cursor + count,
                history + (word,),
                words + (word,),
                score + adjusted + bonus,
                used | {(line, folded)} if boosted else used,
            )

    recurse(0, 0, (), (), 0.0, frozenset())
    return best[1] if best else None, best[2] if best else None, nodes


def random_toy_instance(seed: int):
    rng = random.Random(seed)
    lines = [
        " ".join(rng.choice(TOY_WORDS) for _ in range(rng.randint(3, 6))) for _ in range(8)
    ]
    model = vw.train_ngram("\n".join(lines) + "\n", order=2, smoothing="add-k", k=0.5, min_count=1)
    num_phrases = rng.randint(1, 2)
    budgets = tuple(rng.randint(2, 3) for _ in range(num_phrases))
    rhythm = tuple(tuple(rng.randint(0, 1) for _ in range(b)) for b in budgets)
    constraints = vw.ConstraintSet(budgets, rhythm)
    plan = vw.Plan(tuple((rng.choice(TOY_WORDS + ["zzzz"]),) for _ in range(num_phrases)))
    alpha = rng.choice([1.0, 0.3, 0.01])
    return model, constraints, plan, alpha


@pytest.mark.parametrize("seed", range(12))
def test_beam_matches_exhaustive_oracle(seed):
    model, constraints, plan, alpha = random_toy_instance(seed)
    boost = math.log(4.0)
    words, score, nodes = oracle_search(model, TOY_LEXICON, plan, constraints, alpha, boost)
    assert words is not None
    config = vw.DecoderConfig(
        alpha=alpha,
        beam_width=nodes,
        num_groups=1,
        diversity_strength=0.0,
        top_k=len(TOY_WORDS) + 5,
        keyword_boost=boost,
    )
    result = vw.generate(plan, constraints, model, TOY_LEXICON, config)
    produced = tuple(w for line in result.lines for w in line.split())
    assert produced == words
    assert result.score == score  # identical accumulation order: bitwise equal


@pytest.mark.parametrize("seed", [0, 3, 7])
def test_beam_score_decomposes_into_lm_plus_adjustments(seed):
    model, constraints, plan, alpha = random_toy_instance(seed)
    config = vw.DecoderConfig(
        alpha=alpha, beam_width=8, num_groups=1, diversity_strength=0.0, top_k=50
    )
    result = vw.generate(plan, constraints, model, TOY_LEXICON, config)
    history: list[str] = []
    adjustments = 0.0
    boosts = 0.0
    active = [i for i, b in enumerate(constraints.budgets) if b > 0]
    used: set[tuple[int, str]] = set()
    for phrase, line in enumerate(result.lines):
        cursor = 0
        for word in line.split():
            window = constraints.rhythm[phrase][
                cursor : cursor + TOY_LEXICON.lookup(word)[0].syllable_count
            ]
            if not vw.rhythm_satisfied(TOY_LEXICON, word, window):
                adjustments += math.log(alpha)
            plan_line = active.index(phrase)
            folded = word.casefold()
            if folded in {k.casefold() for k in plan.lines[plan_line]} and (
                plan_line,
                folded,
            ) not in used:
                boosts += config.keyword_boost
                used.add((plan_line, folded))
            cursor += len(window)
            history.append(word)
        history.append(vw.BOUNDARY_TOKEN)
    lm_total = model.sequence_logprob(history)
    assert result.score == pytest.approx(lm_total + adjustments + boosts, abs=1e-9)


# -- constraint structure -----------------------------------------------------


def test_generated_lines_hit_budgets_exactly(trigram, lexicon):
    constraints = vw.ConstraintSet((6, 4), ((1, 0, 1, 0, 1, 0), (1, 1, 0, 1)))
    plan = vw.Plan((("moon",), ("river",)))
    result = vw.generate(plan, constraints, trigram, lexicon)
    assert result.syllable_counts == (6, 4)
    for line, budget in zip(result.lines, constraints.budgets):
        assert vw.count_syllables_line(lexicon, line) == budget


def test_zero_budget_phrases_produce_empty_lines(trigram, lexicon):
    constraints = vw.ConstraintSet((2, 0, 2), ((1, 0), (), (1, 1)))
    plan = vw.Plan((("moon",), ("night",)))
    result = vw.generate(plan, constraints, trigram, lexicon)
    assert len(result.lines) == 3
    assert result.lines[1] == ""
    assert result.syllable_counts == (2, 0, 2)


def test_all_rest_melody_yields_empty_lyric(trigram, lexicon):
    constraints = vw.ConstraintSet((0,), ((),))
    result = vw.generate(vw.Plan(()), constraints, trigram, lexicon)
    assert result.lines == ("",)
    assert result.score == 0.0


def test_plan_phrase_mismatch_rejected(trigram, lexicon):
    constraints = vw.ConstraintSet((2, 2), ((1, 0), (1, 0)))
    with pytest.raises(vw.InputFormatError, match="plan"):
        vw.generate(vw.Plan((("moon",),)), constraints, trigram, lexicon)


def test_decoder_config_validation():
    with pytest.raises(vw.InputFormatError):
        vw.DecoderConfig(alpha=2.0)
    with pytest.raises(vw.InputFormatError):
        vw.DecoderConfig(beam_width=6, num_groups=4)
    with pytest.raises(vw.InputFormatError):
        vw.DecoderConfig(top_k=0)
    with pytest.raises(vw.InputFormatError):
        vw.DecoderConfig(oov_policy="ignore")
    with pytest.raises(vw.InputFormatError):
        vw.DecoderConfig(diversity_strength=-1.0)


def test_generation_is_deterministic(trigram, lexicon):
    constraints = vw.ConstraintSet((5,), ((1, 0, 1, 0, 1),))
    plan = vw.Plan((("river",),))
    first = vw.generate(plan, constraints, trigram, lexicon)
    second = vw.generate(plan, constraints, trigram, lexicon)
    assert first.lines == second.lines
    assert first.score == second.score


# -- fallback ladder ----------------------------------------------------------


def test_hard_mode_soften_relaxation_logged():
    # only "river" (stress 1,0) exists; the melody demands (0,1): hard mode must soften
    scorer = UnigramScorer({"river": -1.0})
    constraints = vw.ConstraintSet((2,), ((0, 1),))
    result = vw.generate(
        single_line_plan("zzzz"),
        constraints,
        scorer,
        TOY_LEXICON,
        vw.DecoderConfig(alpha=0.0, beam_width=2, num_groups=1, diversity_strength=0.0),
    )
    assert result.lines == ("river",)
    assert result.violations == 1
    assert len(result.relaxations) == 1
    relaxation = result.relaxations[0]
    assert relaxation.stage == STAGE_SOFTEN
    assert (relaxation.phrase_index, relaxation.slot_index, relaxation.word) == (0, 0, "river")
    # the softened step pays exactly log(0.01)
    assert result.score == pytest.approx(-1.0 + math.log(0.01), abs=1e-12)


def test_soft_mode_mismatch_is_penalty_not_violation():
    scorer = UnigramScorer({"river": -1.0})
    constraints = vw.ConstraintSet((2,), ((0, 1),))
    result = vw.generate(
        single_line_plan("zzzz"),
        constraints,
        scorer,
        TOY_LEXICON,
        vw.DecoderConfig(alpha=0.01, beam_width=2, num_groups=1, diversity_strength=0.0),
    )
    assert result.lines == ("river",)
    assert result.violations == 0 and result.relaxations == ()
    assert result.score == pytest.approx(-1.0 + math.log(0.01), abs=1e-12)


def test_dead_end_reports_furthest_slot():
    # "golden" fills two slots, then nothing fits the last single slot
    scorer = UnigramScorer({"golden": -1.0})
    constraints = vw.ConstraintSet((3,), ((1, 0, 1),))
    with pytest.raises(vw.UnsatisfiableConstraintsError) as excinfo:
        vw.generate(
            single_line_plan("zzzz"),
            constraints,
            scorer,
            TOY_LEXICON,
            vw.DecoderConfig(alpha=0.01, beam_width=2, num_groups=1, diversity_strength=0.0),
        )
    assert excinfo.value.phrase_index == 0
    assert excinfo.value.slot_index == 2


def test_oov_reject_policy_can_dead_end():
    scorer = UnigramScorer({"blorp": -1.0})
    constraints = vw.ConstraintSet((1,), ((1,),))
    with pytest.raises(vw.UnsatisfiableConstraintsError):
        vw.generate(
            single_line_plan("zzzz"),
            constraints,
            scorer,
            TOY_LEXICON,
            vw.DecoderConfig(alpha=0.01, oov_policy="reject", beam_width=2, num_groups=1),
        )


def test_oov_penalize_policy_places_estimated_word():
    scorer = UnigramScorer({"blorp": -1.0})
    constraints = vw.ConstraintSet((1,), ((1,),))
    result = vw.generate(
        single_line_plan("zzzz"),
        constraints,
        scorer,
        TOY_LEXICON,
        vw.DecoderConfig(alpha=0.01, oov_policy="penalize", beam_width=2, num_groups=1),
    )
    assert result.lines == ("blorp",)
    # out-of-vocabulary words never satisfy rhythm: alpha penalty applies
    assert result.score == pytest.approx(-1.0 + math.log(0.01), abs=1e-12)
    assert result.violations == 0


# -- diversity and keywords ---------------------------------------------------


def test_diverse_groups_avoid_repeating_first_choices():
    scorer = UnigramScorer({"sun": -1.0, "star": -1.01, "the": -10.0})
    constraints = vw.ConstraintSet((1,), ((1,),))
    config = vw.DecoderConfig(
        alpha=1.0, beam_width=2, num_groups=2, diversity_strength=10.0, top_k=10
    )
    result = vw.generate(
        single_line_plan("zzzz"), constraints, scorer, TOY_LEXICON, config, collect_trace=True
    )
    first_round = [step for step in result.trace if step["round"] == 0]
    chosen = [step["selected"][0]["word"] for step in first_round]
    assert chosen == ["sun", "star"]  # second group penalized away from "sun"
    assert result.lines == ("sun",)  # best raw score still wins the final ranking


def test_zero_diversity_lets_groups_agree():
    scorer = UnigramScorer({"sun": -1.0, "star": -1.01, "the": -10.0})
    constraints = vw.ConstraintSet((1,), ((1,),))
    config = vw.DecoderConfig(
        alpha=1.0, beam_width=2, num_groups=2, diversity_strength=0.0, top_k=10
    )
    result = vw.generate(
        single_line_plan("zzzz"), constraints, scorer, TOY_LEXICON, config, collect_trace=True
    )
    first_round = [step for step in result.trace if step["round"] == 0]
    chosen = [step["selected"][0]["word"] for step in first_round]
    assert chosen == ["sun", "sun"]


def test_keyword_boost_lifts_planned_word():
    scorer = UnigramScorer({"sun": -5.0, "star": -1.0})
    constraints = vw.ConstraintSet((1,), ((1,),))
    weak = vw.generate(
        single_line_plan("sun"),
        constraints,
        scorer,
        TOY_LEXICON,
        vw.DecoderConfig(alpha=1.0, beam_width=2, num_groups=1, keyword_boost=math.log(4.0)),
    )
    assert weak.lines == ("star",)  # log(4) cannot close a 4-nat gap
    strong = vw.generate(
        single_line_plan("sun"),
        constraints,
        scorer,
        TOY_LEXICON,
        vw.DecoderConfig(alpha=1.0, beam_width=2, num_groups=1, keyword_boost=6.0),
    )
    assert strong.lines == ("sun",)


def test_keyword_boost_applies_once_per_line():
    scorer = UnigramScorer({"sun": -5.0, "star": -1.0})
    constraints = vw.ConstraintSet((2,), ((1, 1),))
    result = vw.generate(
        single_line_plan("sun"),
        constraints,
        scorer,
        TOY_LEXICON,
        vw.DecoderConfig(alpha=1.0, beam_width=8, num_groups=1, keyword_boost=6.0, top_k=10),
    )
    words = result.lines[0].split()
    assert sorted(words) == ["star", "sun"]  # a second "sun" would cost 5 with no boost


def test_trace_collection_optional(trigram, lexicon):
    constraints = vw.ConstraintSet((2,), ((1, 0),))
    plan = vw.Plan((("moon",),))
    without = vw.generate(plan, constraints, trigram, lexicon)
    assert without.trace is None
    with_trace = vw.generate(plan, constraints, trigram, lexicon, collect_trace=True)
    assert with_trace.trace
    assert {"round", "group", "selected"} <= set(with_trace.trace[0])
