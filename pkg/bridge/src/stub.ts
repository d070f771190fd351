import { type Candidate, type WordModel, rankCandidates } from "./model.js";

export const STUB_VOCABULARY: readonly string[] = [
  "moon", "river", "night", "day", "love", "heart", "light", "dream",
  "song", "star", "sweet", "home", "blue", "gold", "rain", "true",
];

const FNV_OFFSET = 0x811c9dc5;
const FNV_PRIME = 0x01000193;
const SENTENCE_START = "<s>";

const encoder = new TextEncoder();

export function fnv1a(data: Uint8Array): number {
  let value = FNV_OFFSET >>> 0;
  for (const byte of data) {
    value = Math.imul(value ^ byte, FNV_PRIME) >>> 0;
  }
  return value;
}

/** Hash-derived logprob, always an exact multiple of 1/8 in [-29/8, -1/8]. */
export function stubLogprob(previous: string, word: string): number {
  const hash = fnv1a(encoder.encode(`${previous}|${word}`));
  return -((hash % 29) + 1) / 8;
}

/**
 * Deterministic scorer over a fixed 16-word vocabulary. Scores depend only on
 * the immediately preceding token, so any implementation of the same hashing
 * recipe produces bit-identical numbers.
 */
export class StubModel implements WordModel {
  nextCandidates(context: readonly string[], topK: number): Candidate[] {
    const previous = context.length > 0 ? context[context.length - 1]! : SENTENCE_START;
    const ranked = rankCandidates(
      STUB_VOCABULARY.map((word) => ({ word, logprob: stubLogprob(previous, word) })),
    );
    return ranked.slice(0, Math.max(0, topK));
  }

  sequenceLogprob(words: readonly string[]): number {
    let previous = SENTENCE_START;
    let total = 0;
    for (const word of words) {
      total += stubLogprob(previous, word);
      previous = word;
    }
    return total;
  }
}
