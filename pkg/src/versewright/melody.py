"""Melody data model and compilation into syllable budgets plus binary rhythm patterns.

A melody file is one JSON document: ``{"title": optional string, "phrases":
[{"notes": [{"dur": number > 0, "pitch": int or null, "slur": optional positive
int}]}]}``. Rests are notes without a pitch; consecutive notes sharing a slur
id are sung on one syllable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import InputFormatError
from .phonetics import Lexicon, stress_pattern_line


class MelodyParseError(InputFormatError):
    """Melody document violates the schema; message names the phrase/note index."""


@dataclass(frozen=True)
class Note:
    duration: float
    pitch: int | None = None
    slur_group: int | None = None

    @property
    def is_rest(self) -> bool:
        return self.pitch is None

    def __post_init__(self) -> None:
        if not self.duration > 0:
            raise InputFormatError(f"note duration must be positive, got {self.duration!r}")
        if self.is_rest and self.slur_group is not None:
            raise InputFormatError("a rest cannot carry a slur group")
        if self.slur_group is not None and self.slur_group < 1:
            raise InputFormatError(f"slur group must be positive, got {self.slur_group!r}")


@dataclass(frozen=True)
class Phrase:
    notes: tuple[Note, ...]

    def __post_init__(self) -> None:
        if not self.notes:
            raise InputFormatError("phrase must contain at least one note")
        seen_groups: set[int] = set()
        previous: int | None = None
        for note in self.notes:
            group = note.slur_group
            if group is not None and group != previous and group in seen_groups:
                raise InputFormatError(f"slur group {group} is not a consecutive run")
            if group is not None:
                seen_groups.add(group)
            previous = group


@dataclass(frozen=True)
class Melody:
    phrases: tuple[Phrase, ...]
    title: str | None = None

    def __post_init__(self) -> None:
        if not self.phrases:
            raise InputFormatError("melody must contain at least one phrase")


@dataclass(frozen=True)
class SyllableSlot:
    duration: float
    phrase_index: int
    slot_index: int


@dataclass(frozen=True)
class ConstraintSet:
    """Per-phrase syllable budgets and required binary stress marks, one mark per slot."""

    budgets: tuple[int, ...]
    rhythm: tuple[tuple[int, ...], ...] = field(default=())

    def __post_init__(self) -> None:
        if len(self.rhythm) != len(self.budgets):
            raise InputFormatError("rhythm and budgets must cover the same phrases")
        for budget, marks in zip(self.budgets, self.rhythm):
            if budget < 0 or len(marks) != budget:
                raise InputFormatError("each rhythm pattern must have one mark per budgeted slot")
            if any(mark not in (0, 1) for mark in marks):
                raise InputFormatError("rhythm marks must be 0 or 1")

    def to_dict(self) -> dict:
        return {"budgets": list(self.budgets), "rhythm": [list(m) for m in self.rhythm]}

    @classmethod
    def from_dict(cls, payload: dict) -> ConstraintSet:
        try:
            budgets = tuple(int(b) for b in payload["budgets"])
            rhythm = tuple(tuple(int(m) for m in marks) for marks in payload["rhythm"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InputFormatError(f"bad constraint payload: {exc}") from exc
        return cls(budgets, rhythm)


def parse_melody(text: str) -> Melody:
    """Parse and structurally validate one melody document."""
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MelodyParseError(f"melody is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or not isinstance(payload.get("phrases"), list):
        raise MelodyParseError("melody must be an object with a 'phrases' array")
    title = payload.get("title")
    if title is not None and not isinstance(title, str):
        raise MelodyParseError("melody title must be a string")
    phrases: list[Phrase] = []
    for p_index, raw_phrase in enumerate(payload["phrases"]):
        if not isinstance(raw_phrase, dict) or not isinstance(raw_phrase.get("notes"), list):
            raise MelodyParseError(f"phrase {p_index}: must be an object with a 'notes' array")
        notes: list[Note] = []
        for n_index, raw_note in enumerate(raw_phrase["notes"]):
            notes.append(_parse_note(raw_note, p_index, n_index))
        try:
            phrases.append(Phrase(tuple(notes)))
        except InputFormatError as exc:
            raise MelodyParseError(f"phrase {p_index}: {exc}") from exc
    try:
        return Melody(tuple(phrases), title=title)
    except InputFormatError as exc:
        raise MelodyParseError(str(exc)) from exc


def _parse_note(raw: object, p_index: int, n_index: int) -> Note:
    where = f"phrase {p_index}, note {n_index}"
    if not isinstance(raw, dict):
        raise MelodyParseError(f"{where}: note must be an object")
    duration = raw.get("dur")
    if not isinstance(duration, (int, float)) or isinstance(duration, bool) or duration <= 0:
        raise MelodyParseError(f"{where}: 'dur' must be a positive number")
    pitch = raw.get("pitch")
    if pitch is not None and (not isinstance(pitch, int) or isinstance(pitch, bool)):
        raise MelodyParseError(f"{where}: 'pitch' must be an integer or null")
    slur = raw.get("slur")
    if slur is not None and (not isinstance(slur, int) or isinstance(slur, bool) or slur < 1):
        raise MelodyParseError(f"{where}: 'slur' must be a positive integer")
    try:
        return Note(float(duration), pitch, slur)
    except InputFormatError as exc:
        raise MelodyParseError(f"{where}: {exc}") from exc


def syllable_slots(phrase: Phrase, phrase_index: int = 0) -> list[SyllableSlot]:
    """One slot per sung syllable: rests drop out, slurred runs collapse to one slot."""
    slots: list[SyllableSlot] = []
    pending_group: int | None = None
    pending_duration = 0.0
    for note in phrase.notes:
        if note.is_rest:
            continue
        if note.slur_group is not None and note.slur_group == pending_group:
            pending_duration += note.duration
            continue
        if pending_duration:
            slots.append(SyllableSlot(pending_duration, phrase_index, len(slots)))
        pending_group = note.slur_group
        pending_duration = note.duration
    if pending_duration:
        slots.append(SyllableSlot(pending_duration, phrase_index, len(slots)))
    return slots


def compile_constraints(melody: Melody, mean_scope: str = "phrase") -> ConstraintSet:
    """Budgets = slot counts; a slot is marked stressed (1) iff its duration >= the mean slot duration.

    ``mean_scope`` selects the comparison baseline: "phrase" (default) contrasts
    each slot against its own phrase's mean, "song" against the whole melody.
    """
    if mean_scope not in ("phrase", "song"):
        raise InputFormatError(f"mean_scope must be 'phrase' or 'song', got {mean_scope!r}")
    per_phrase = [syllable_slots(phrase, i) for i, phrase in enumerate(melody.phrases)]
    all_durations = [slot.duration for slots in per_phrase for slot in slots]
    song_mean = sum(all_durations) / len(all_durations) if all_durations else 0.0
    budgets: list[int] = []
    rhythm: list[tuple[int, ...]] = []
    for slots in per_phrase:
        budgets.append(len(slots))
        if not slots:
            rhythm.append(())
            continue
        if mean_scope == "phrase":
            mean = sum(slot.duration for slot in slots) / len(slots)
        else:
            mean = song_mean
        rhythm.append(tuple(1 if slot.duration >= mean else 0 for slot in slots))
    return ConstraintSet(tuple(budgets), tuple(rhythm))


def melody_from_lines(lexicon: Lexicon, lines: list[str], title: str | None = None) -> Melody:
    """One phrase per lyric line, one note per syllable: duration 2 for stressed, 1 otherwise.

    Compiling the result reproduces the lyric's own stress pattern as the
    rhythm constraint (each phrase mixes durations 1 and 2 around a mean
    strictly between them, except all-equal phrases, which mark every slot
    stressed). Words missing from the lexicon contribute a stressed first
    syllable and unstressed remainder.
    """
    phrases: list[Phrase] = []
    for line in lines:
        stress = stress_pattern_line(lexicon, line)
        marks: list[int] = []
        for span in stress.spans:
            if span.marks is not None:
                marks.extend(span.marks)
            else:
                marks.extend([1] + [0] * (span.count - 1))
        if not marks:
            raise MelodyParseError(f"line has no syllables: {line!r}")
        notes = tuple(Note(duration=2.0 if mark else 1.0, pitch=60) for mark in marks)
        phrases.append(Phrase(notes))
    return Melody(tuple(phrases), title=title)
