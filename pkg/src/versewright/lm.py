"""Next-word scoring: a trainable n-gram model plus a client for external scorers.

Lines are independent scoring units. The reserved boundary token may appear in
a context history to separate lines; it is never an outcome, so conditional
distributions range over vocabulary + the unknown token and sum to one.
"""

from __future__ import annotations

import json
import math
import queue
import subprocess
import threading
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Protocol, Sequence

from .errors import BridgeTransportError, EngineError, InputFormatError

BOUNDARY_TOKEN = "</line>"
UNK_TOKEN = "<unk>"
_BOS_TOKEN = "<s>"
RESERVED_TOKENS = frozenset({BOUNDARY_TOKEN, UNK_TOKEN, _BOS_TOKEN})

PROTOCOL_VERSION = "1"

SMOOTHING_ADD_K = "add-k"
SMOOTHING_INTERPOLATED = "interpolated"


class TrainingError(InputFormatError):
    """Corpus unusable for training."""


class BridgeModelError(EngineError, RuntimeError):
    """The remote model reported an error for a well-formed request."""


class Candidate(NamedTuple):
    word: str
    logprob: float


@dataclass(frozen=True)
class Context:
    """Decoder-visible generation history; line breaks appear as the boundary token."""

    history: tuple[str, ...] = ()
    line_index: int = 0


class Scorer(Protocol):
    """What the decoder needs from any language model."""

    def next_candidates(self, context: Context, top_k: int) -> list[Candidate]: ...

    def sequence_logprob(self, words: Sequence[str]) -> float: ...


def _line_segment(history: Iterable[str]) -> list[str]:
    """Tokens after the last boundary marker: the in-progress line."""
    segment: list[str] = []
    for token in history:
        if token == BOUNDARY_TOKEN:
            segment.clear()
        else:
            segment.append(token)
    return segment


class NGramModel:
    """Count-based n-gram model with add-k or interpolated add-k backoff smoothing."""

    def __init__(
        self,
        order: int,
        smoothing: str,
        k: float,
        min_count: int,
        vocabulary: tuple[str, ...],
        counts: list[dict[tuple[str, ...], dict[str, int]]],
        totals: list[dict[tuple[str, ...], int]],
    ) -> None:
        self.order = order
        self.smoothing = smoothing
        self.k = k
        self.min_count = min_count
        self.vocabulary = vocabulary
        self._vocab_set = frozenset(vocabulary)
        self._counts = counts
        self._totals = totals
        # Outcome space: vocabulary plus the unknown token.
        self._events = tuple(sorted(vocabulary)) + (UNK_TOKEN,)
        self._candidate_cache: dict[tuple[str, ...], list[Candidate]] = {}

    # -- scoring ---------------------------------------------------------

    def _map(self, word: str) -> str:
        if word in (_BOS_TOKEN, BOUNDARY_TOKEN):
            return word
        return word if word in self._vocab_set else UNK_TOKEN

    def _context_key(self, history: Sequence[str]) -> tuple[str, ...]:
        segment = [self._map(w) for w in _line_segment(history)]
        padded = [_BOS_TOKEN] * (self.order - 1) + segment
        return tuple(padded[len(padded) - (self.order - 1):]) if self.order > 1 else ()

    def _prob(self, ctx: tuple[str, ...], word: str, level: int) -> float:
        """P(word | last level-1 tokens of ctx); interpolated recursion is exactly normalized."""
        events = len(self._events)
        sub_ctx = ctx[len(ctx) - (level - 1):] if level > 1 else ()
        seen = self._counts[level - 1].get(sub_ctx, {})
        total = self._totals[level - 1].get(sub_ctx, 0)
        count = seen.get(word, 0)
        if self.smoothing == SMOOTHING_ADD_K:
            return (count + self.k) / (total + self.k * events)
        lower = 1.0 / events if level == 1 else self._prob(ctx, word, level - 1)
        return (count + self.k * events * lower) / (total + self.k * events)

    def conditional_logprob(self, history: Sequence[str], word: str) -> float:
        """log P(word | history); the word maps to the unknown token when out of vocabulary."""
        ctx = self._context_key(history)
        return math.log(self._prob(ctx, self._map(word), self.order))

    def next_candidates(self, context: Context, top_k: int) -> list[Candidate]:
        """Top-k outcomes by logprob, ties broken lexicographically."""
        if top_k < 1:
            raise InputFormatError(f"top_k must be >= 1, got {top_k}")
        ctx = self._context_key(context.history)
        ranked = self._candidate_cache.get(ctx)
        if ranked is None:
            ranked = [Candidate(w, math.log(self._prob(ctx, w, self.order))) for w in self._events]
            ranked.sort(key=lambda c: (-c.logprob, c.word))
            self._candidate_cache[ctx] = ranked
        return ranked[:top_k]

    def sequence_logprob(self, words: Sequence[str]) -> float:
        """Sum of stepwise conditional logprobs; boundary tokens reset the line context."""
        if not words:
            raise InputFormatError("sequence_logprob requires at least one word")
        total = 0.0
        for index, word in enumerate(words):
            if word == BOUNDARY_TOKEN:
                continue
            total += self.conditional_logprob(tuple(words[:index]), word)
        return total

    def perplexity(self, lines: str) -> float:
        """exp(-logprob / scored word count) over line-oriented text."""
        total = 0.0
        scored = 0
        for line in lines.splitlines():
            words = line.split()
            if not words:
                continue
            total += self.sequence_logprob(words)
            scored += len(words)
        if scored == 0:
            raise InputFormatError("perplexity requires at least one word")
        return math.exp(-total / scored)

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "smoothing": self.smoothing,
            "k": self.k,
            "min_count": self.min_count,
            "vocabulary": list(self.vocabulary),
            "counts": [
                {" ".join(ctx): dict(sorted(words.items())) for ctx, words in sorted(level.items())}
                for level in self._counts
            ],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> NGramModel:
        try:
            order = int(payload["order"])
            smoothing = payload["smoothing"]
            k = float(payload["k"])
            min_count = int(payload["min_count"])
            vocabulary = tuple(payload["vocabulary"])
            counts: list[dict[tuple[str, ...], dict[str, int]]] = []
            for level in payload["counts"]:
                table: dict[tuple[str, ...], dict[str, int]] = {}
                for ctx_key, words in level.items():
                    ctx = tuple(ctx_key.split()) if ctx_key else ()
                    table[ctx] = {w: int(c) for w, c in words.items()}
                counts.append(table)
        except (KeyError, TypeError, ValueError) as exc:
            raise InputFormatError(f"bad model payload: {exc}") from exc
        totals = [{ctx: sum(words.values()) for ctx, words in level.items()} for level in counts]
        return cls(order, smoothing, k, min_count, vocabulary, counts, totals)


def train_ngram(
    corpus: str,
    order: int = 3,
    smoothing: str = SMOOTHING_INTERPOLATED,
    k: float = 0.1,
    min_count: int = 2,
) -> NGramModel:
    """Train on line-oriented lyrics text; each line is an independent sequence."""
    if not 1 <= order <= 5:
        raise TrainingError(f"order must be in [1, 5], got {order}")
    if smoothing not in (SMOOTHING_ADD_K, SMOOTHING_INTERPOLATED):
        raise TrainingError(f"unknown smoothing {smoothing!r}")
    if not k > 0:
        raise TrainingError(f"smoothing constant k must be > 0, got {k}")
    lines = [line.split() for line in corpus.splitlines() if line.split()]
    if not lines:
        raise TrainingError("empty corpus")

    frequency: dict[str, int] = {}
    for words in lines:
        for word in words:
            frequency[word] = frequency.get(word, 0) + 1
    vocabulary = tuple(sorted(w for w, c in frequency.items() if c >= min_count and w not in RESERVED_TOKENS))
    vocab_set = frozenset(vocabulary)

    counts: list[dict[tuple[str, ...], dict[str, int]]] = [{} for _ in range(order)]
    totals: list[dict[tuple[str, ...], int]] = [{} for _ in range(order)]
    for words in lines:
        mapped = [w if w in vocab_set else UNK_TOKEN for w in words]
        padded = [_BOS_TOKEN] * (order - 1) + mapped
        for position in range(order - 1, len(padded)):
            word = padded[position]
            for level in range(1, order + 1):
                ctx = tuple(padded[position - (level - 1):position])
                bucket = counts[level - 1].setdefault(ctx, {})
                bucket[word] = bucket.get(word, 0) + 1
                totals[level - 1][ctx] = totals[level - 1].get(ctx, 0) + 1
    return NGramModel(order, smoothing, k, min_count, vocabulary, counts, totals)


# -- wire-protocol client -------------------------------------------------


class BridgeClient:
    """Talks the newline-delimited JSON protocol to a bridge subprocess over its stdio.

    Implements the same Scorer surface as NGramModel, so the decoder can run
    against an external model unchanged. Requests are serialized per client.
    """

    def __init__(self, command: Sequence[str], timeout: float = 10.0) -> None:
        self.timeout = timeout
        self._next_id = 0
        self._proc = subprocess.Popen(
            list(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
            encoding="utf-8",
        )
        self._lines: queue.Queue[str | None] = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        self._handshake()

    def _pump(self) -> None:
        assert self._proc.stdout is not None
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def _request(self, payload: dict) -> dict:
        request_id = self._next_id
        self._next_id += 1
        payload = {"id": request_id, **payload}
        assert self._proc.stdin is not None
        try:
            self._proc.stdin.write(json.dumps(payload) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise BridgeTransportError(f"bridge stream closed: {exc}") from exc
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            raise BridgeTransportError(f"bridge response timed out after {self.timeout}s") from None
        if line is None:
            raise BridgeTransportError("bridge closed its output stream")
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise BridgeTransportError(f"malformed bridge response: {line!r}") from exc
        if not isinstance(response, dict):
            raise BridgeTransportError(f"bridge response is not an object: {line!r}")
        if response.get("id") != request_id:
            raise BridgeTransportError(
                f"bridge response id {response.get('id')!r} does not match request id {request_id}"
            )
        if "error" in response:
            raise BridgeModelError(str(response["error"]))
        return response

    def _handshake(self) -> None:
        response = self._request({"op": "hello", "version": PROTOCOL_VERSION})
        if response.get("ok") is not True or response.get("version") != PROTOCOL_VERSION:
            raise BridgeTransportError(f"handshake failed: {response!r}")

    def next_candidates(self, context: Context, top_k: int) -> list[Candidate]:
        response = self._request({"op": "next", "context": list(context.history), "top_k": top_k})
        raw = response.get("candidates")
        if not isinstance(raw, list):
            raise BridgeTransportError(f"bridge 'next' response missing candidates: {response!r}")
        candidates: list[Candidate] = []
        for item in raw:
            if not isinstance(item, dict) or "word" not in item or "logprob" not in item:
                raise BridgeTransportError(f"bad candidate in bridge response: {item!r}")
            candidates.append(Candidate(str(item["word"]), float(item["logprob"])))
        return candidates

    def sequence_logprob(self, words: Sequence[str]) -> float:
        response = self._request({"op": "score", "words": list(words)})
        if "logprob" not in response:
            raise BridgeTransportError(f"bridge 'score' response missing logprob: {response!r}")
        return float(response["logprob"])

    def close(self) -> None:
        if self._proc.stdin is not None and not self._proc.stdin.closed:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
        self._proc.wait(timeout=5)

    def __enter__(self) -> BridgeClient:
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()


def remote_next_candidates(endpoint: BridgeClient, context: Context, top_k: int) -> list[Candidate]:
    """next_candidates over the wire; responses are matched to requests by id."""
    return endpoint.next_candidates(context, top_k)
