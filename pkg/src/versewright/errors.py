"""Shared exception hierarchy: every domain error raised by this package subclasses EngineError."""

from __future__ import annotations


class EngineError(Exception):
    """Base class for all domain errors; the CLI maps these to exit code 1."""


class InputFormatError(EngineError, ValueError):
    """Malformed input file or value."""


class UnsatisfiableConstraintsError(EngineError, RuntimeError):
    """Search exhausted every hypothesis before all phrases were filled."""

    def __init__(self, message: str, *, phrase_index: int, slot_index: int) -> None:
        super().__init__(message)
        self.phrase_index = phrase_index
        self.slot_index = slot_index


class BridgeTransportError(EngineError, RuntimeError):
    """Wire-protocol failure (timeout, malformed frame, id mismatch) as opposed to a model error."""
