"""Melody-constrained lyric generation: compile a tune into syllable and rhythm
constraints, plan keywords, and decode singable lines with a pluggable language model."""

from .decoder import (
    DecoderConfig,
    Hypothesis,
    LyricResult,
    PlacedWord,
    Relaxation,
    adjusted_logprob,
    extend,
    generate,
    rhythm_satisfied,
)
from .errors import (
    BridgeTransportError,
    EngineError,
    InputFormatError,
    UnsatisfiableConstraintsError,
)
from .lm import (
    BOUNDARY_TOKEN,
    UNK_TOKEN,
    BridgeClient,
    BridgeModelError,
    Candidate,
    Context,
    NGramModel,
    Scorer,
    train_ngram,
)
from .melody import (
    ConstraintSet,
    Melody,
    MelodyParseError,
    Note,
    Phrase,
    SyllableSlot,
    compile_constraints,
    melody_from_lines,
    parse_melody,
    syllable_slots,
)
from .metrics import (
    AlignmentError,
    EvalReport,
    bleu,
    cropped_ratio,
    distinct_n,
    evaluate,
    salient_coverage,
    stress_duration_pct,
)
from .multitask import (
    TaskSample,
    annotate_line,
    build_dataset,
    emit_count,
    emit_count_annotated,
    emit_phonemes,
    emit_plan_to_lyrics,
    phoneme_spelling,
    success_rate,
)
from .phonetics import (
    Lexicon,
    LexiconParseError,
    NonLexicalTokenError,
    PhonemeSymbol,
    Pronunciation,
    count_syllables_line,
    count_syllables_word,
    estimate_syllables,
    load_lexicon,
    parse_lexicon,
    stress_pattern_line,
    syllabify,
    syllable_strings,
    tokenize,
)
from .planner import (
    CooccurrenceTable,
    GenerationRequest,
    Plan,
    PlanError,
    extract_salient,
    make_plan,
    parse_plan_text,
    render_plan,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentError",
    "BOUNDARY_TOKEN",
    "BridgeClient",
    "BridgeModelError",
    "BridgeTransportError",
    "Candidate",
    "ConstraintSet",
    "Context",
    "CooccurrenceTable",
    "DecoderConfig",
    "EngineError",
    "EvalReport",
    "GenerationRequest",
    "Hypothesis",
    "InputFormatError",
    "Lexicon",
    "LexiconParseError",
    "LyricResult",
    "Melody",
    "MelodyParseError",
    "NGramModel",
    "NonLexicalTokenError",
    "Note",
    "Phrase",
    "PhonemeSymbol",
    "PlacedWord",
    "Plan",
    "PlanError",
    "Pronunciation",
    "Relaxation",
    "Scorer",
    "SyllableSlot",
    "TaskSample",
    "UNK_TOKEN",
    "UnsatisfiableConstraintsError",
    "adjusted_logprob",
    "annotate_line",
    "bleu",
    "build_dataset",
    "compile_constraints",
    "count_syllables_line",
    "count_syllables_word",
    "cropped_ratio",
    "distinct_n",
    "emit_count",
    "emit_count_annotated",
    "emit_phonemes",
    "emit_plan_to_lyrics",
    "estimate_syllables",
    "evaluate",
    "extend",
    "extract_salient",
    "generate",
    "load_lexicon",
    "make_plan",
    "melody_from_lines",
    "parse_lexicon",
    "parse_melody",
    "parse_plan_text",
    "phoneme_spelling",
    "render_plan",
    "rhythm_satisfied",
    "salient_coverage",
    "stress_pattern_line",
    "stress_duration_pct",
    "success_rate",
    "syllabify",
    "syllable_slots",
    "syllable_strings",
    "tokenize",
    "train_ngram",
]
