"""Training-sample emitters for syllable-aware lyric models, plus the dataset builder.

Four sample shapes share one tab-separated format (input TAB output):
  plan-to-lyrics   full plan prompt → the song, line-tagged
  count            one lyric line → its syllable count
  count-annotated  plan prompt → the song with running per-word syllable totals
  phonemes         words → syllabified phoneme spellings
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .errors import InputFormatError
from .phonetics import (
    Lexicon,
    NonLexicalTokenError,
    count_syllables_line,
    count_syllables_word,
    syllable_strings,
    tokenize,
)
from .planner import Plan, extract_salient, render_plan

TASK_PLAN_TO_LYRICS = "plan-to-lyrics"
TASK_COUNT = "count"
TASK_COUNT_ANNOTATED = "count-annotated"
TASK_PHONEMES = "phonemes"
ALL_TASKS = (TASK_PLAN_TO_LYRICS, TASK_COUNT, TASK_COUNT_ANNOTATED, TASK_PHONEMES)


class DatasetError(InputFormatError):
    """Dataset construction cannot proceed."""


@dataclass(frozen=True)
class TaskSample:
    task: str
    input: str
    output: str


def _song_plan(song_lines: list[str], keywords_per_line: int = 1) -> Plan:
    """Per-line salient keywords extracted from the song itself; lines may come up short."""
    return Plan(tuple(tuple(extract_salient(line, keywords_per_line)) for line in song_lines))


def _line_budgets(lexicon: Lexicon, song_lines: list[str]) -> tuple[int, ...]:
    return tuple(count_syllables_line(lexicon, line) for line in song_lines)


def emit_plan_to_lyrics(lexicon: Lexicon, song_lines: list[str]) -> TaskSample:
    """Plan prompt in, whole song out, each line tagged "Line i:"."""
    if not song_lines:
        raise DatasetError("song has no lines")
    plan = _song_plan(song_lines)
    prompt = render_plan(plan, _line_budgets(lexicon, song_lines))
    output = "; ".join(f"Line {i}: {line}" for i, line in enumerate(song_lines, start=1))
    return TaskSample(TASK_PLAN_TO_LYRICS, prompt, output)


def emit_count(lexicon: Lexicon, line: str) -> TaskSample:
    return TaskSample(TASK_COUNT, line, str(count_syllables_line(lexicon, line)))


def annotate_line(lexicon: Lexicon, line: str) -> str:
    """Each word followed by the running syllable total: "Moon (1) river (3) ..."."""
    total = 0
    pieces = []
    for token in tokenize(line):
        total += count_syllables_word(lexicon, token).count
        pieces.append(f"{token} ({total})")
    if not pieces:
        raise DatasetError("line has no countable words")
    return " ".join(pieces)


def emit_count_annotated(lexicon: Lexicon, song_lines: list[str]) -> TaskSample:
    if not song_lines:
        raise DatasetError("song has no lines")
    plan = _song_plan(song_lines)
    prompt = render_plan(plan, _line_budgets(lexicon, song_lines))
    output = "; ".join(
        f"Line {i}: {annotate_line(lexicon, line)}" for i, line in enumerate(song_lines, start=1)
    )
    return TaskSample(TASK_COUNT_ANNOTATED, prompt, output)


def phoneme_spelling(lexicon: Lexicon, word: str) -> str:
    """First-pronunciation syllables joined by underscores, stress digits dropped: "RIH_VER"."""
    pronunciations = lexicon.lookup(word)
    if not pronunciations:
        raise NonLexicalTokenError(f"word not in lexicon: {word!r}")
    return "_".join(syllable_strings(pronunciations[0]))


def emit_phonemes(lexicon: Lexicon, words: list[str]) -> TaskSample:
    if not words:
        raise DatasetError("no words to spell")
    output = "; ".join(f"{w} → {phoneme_spelling(lexicon, w)}" for w in words)
    return TaskSample(TASK_PHONEMES, " ".join(words), output)


def split_songs(corpus: str) -> list[list[str]]:
    """Songs are blank-line-separated groups of lyric lines."""
    songs: list[list[str]] = []
    current: list[str] = []
    for raw in corpus.splitlines():
        line = raw.strip()
        if line:
            current.append(line)
        elif current:
            songs.append(current)
            current = []
    if current:
        songs.append(current)
    return songs


def apportion(total: int, mix: dict[str, float]) -> dict[str, int]:
    """Largest-remainder split of ``total`` across tasks; counts sum exactly to total."""
    if total < 0:
        raise DatasetError(f"total must be >= 0, got {total}")
    if not mix:
        raise DatasetError("task mix is empty")
    weight = sum(mix.values())
    if weight <= 0 or any(v < 0 for v in mix.values()):
        raise DatasetError("task mix weights must be non-negative and sum > 0")
    for task in mix:
        if task not in ALL_TASKS:
            raise DatasetError(f"unknown task: {task!r}")
    quotas = {task: total * share / weight for task, share in mix.items()}
    counts = {task: int(quota) for task, quota in quotas.items()}
    leftover = total - sum(counts.values())
    by_remainder = sorted(mix, key=lambda t: (-(quotas[t] - counts[t]), t))
    for task in by_remainder[:leftover]:
        counts[task] += 1
    return counts


def build_dataset(
    lexicon: Lexicon,
    corpus: str,
    out_dir: str | Path,
    task_mix: dict[str, float],
    total: int,
    seed: int = 0,
) -> dict:
    """Emit samples per the mix into ``<task>.tsv`` files plus a ``manifest.json``.

    Sampling cycles each task's unit pool in a seeded shuffle; units whose
    emitters fail (unknown words, empty content) are skipped and the reason is
    recorded in the manifest, so actual counts can fall short of the targets.
    """
    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    songs = split_songs(corpus)
    if not songs:
        raise DatasetError("corpus contains no songs")
    lines = [line for song in songs for line in song]
    targets = apportion(total, task_mix)
    rng = random.Random(seed)

    counts: dict[str, int] = {}
    skips: list[dict[str, str]] = []
    files: dict[str, str] = {}
    for task in ALL_TASKS:
        target = targets.get(task, 0)
        if target == 0:
            continue
        pool = list(range(len(songs))) if task in (TASK_PLAN_TO_LYRICS, TASK_COUNT_ANNOTATED) else list(
            range(len(lines))
        )
        rng.shuffle(pool)
        samples: list[TaskSample] = []
        attempts = 0
        limit = max(4 * target, len(pool))
        cursor = 0
        while len(samples) < target and attempts < limit:
            unit = pool[cursor % len(pool)]
            cursor += 1
            attempts += 1
            try:
                if task == TASK_PLAN_TO_LYRICS:
                    samples.append(emit_plan_to_lyrics(lexicon, songs[unit]))
                elif task == TASK_COUNT_ANNOTATED:
                    samples.append(emit_count_annotated(lexicon, songs[unit]))
                elif task == TASK_COUNT:
                    samples.append(emit_count(lexicon, lines[unit]))
                else:
                    words = [t for t in tokenize(lines[unit]) if lexicon.lookup(t)]
                    samples.append(emit_phonemes(lexicon, words))
            except (InputFormatError, NonLexicalTokenError) as exc:
                skips.append({"task": task, "unit": str(unit), "reason": str(exc)})
        counts[task] = len(samples)
        file_name = f"{task}.tsv"
        files[task] = file_name
        with open(out_path / file_name, "w", encoding="utf-8") as handle:
            for sample in samples:
                handle.write(f"{sample.input}\t{sample.output}\n")

    manifest = {
        "seed": seed,
        "total": total,
        "task_mix": {task: task_mix[task] for task in sorted(task_mix)},
        "targets": {task: targets[task] for task in sorted(targets)},
        "counts": {task: counts[task] for task in sorted(counts)},
        "skips": skips,
        "files": {task: files[task] for task in sorted(files)},
        "songs": len(songs),
        "lines": len(lines),
    }
    with open(out_path / "manifest.json", "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return manifest


def success_rate(lexicon: Lexicon, lines: list[str], budgets: list[int]) -> float:
    """Fraction of lines whose syllable count exactly matches the target budget."""
    if len(lines) != len(budgets):
        raise InputFormatError(
            f"line count {len(lines)} does not match budget count {len(budgets)}"
        )
    if not lines:
        raise InputFormatError("no lines to score")
    hits = 0
    for line, budget in zip(lines, budgets):
        try:
            hits += count_syllables_line(lexicon, line) == budget
        except NonLexicalTokenError:
            continue
    return hits / len(lines)
