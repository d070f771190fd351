import { type Candidate, type WordModel, rankCandidates } from "./model.js";

export interface Piece {
  piece: string;
  logprob: number;
}

/**
 * A sub-word model: proposes and scores pieces of the word currently under
 * construction. A piece ending in the continuation suffix keeps the word
 * open; any other piece closes it.
 */
export interface PieceModel {
  nextPieces(context: readonly string[], prefix: readonly string[]): Piece[];
  encode(word: string): string[];
  pieceLogprob(context: readonly string[], prefix: readonly string[], piece: string): number;
}

export interface WrapOptions {
  /** Longest piece chain considered per word. */
  maxPieces?: number;
  /** Open-prefix states kept per expansion step. */
  beamWidth?: number;
  continuationSuffix?: string;
}

interface OpenPrefix {
  prefix: string[];
  logprob: number;
}

/**
 * Adapts a sub-word model to the word-level surface: candidate words are
 * assembled by beam-expanding piece chains until each chain closes, and a
 * word's logprob is the sum of its pieces' logprobs.
 */
export function wrapPretrained(model: PieceModel, options: WrapOptions = {}): WordModel {
  const maxPieces = options.maxPieces ?? 4;
  const beamWidth = options.beamWidth ?? 16;
  const suffix = options.continuationSuffix ?? "@@";
  if (maxPieces < 1 || beamWidth < 1 || !suffix) {
    throw new RangeError("maxPieces and beamWidth must be >= 1 and the suffix non-empty");
  }

  const assemble = (pieces: readonly string[]): string =>
    pieces.map((piece) => (piece.endsWith(suffix) ? piece.slice(0, -suffix.length) : piece)).join("");

  return {
    nextCandidates(context: readonly string[], topK: number): Candidate[] {
      let frontier: OpenPrefix[] = [{ prefix: [], logprob: 0 }];
      const best = new Map<string, number>();
      for (let depth = 0; depth < maxPieces && frontier.length > 0; depth++) {
        const open: OpenPrefix[] = [];
        for (const state of frontier) {
          for (const { piece, logprob } of model.nextPieces(context, state.prefix)) {
            const total = state.logprob + logprob;
            if (piece.endsWith(suffix)) {
              open.push({ prefix: [...state.prefix, piece], logprob: total });
              continue;
            }
            const word = assemble([...state.prefix, piece]);
            if (!word || /\s/.test(word)) {
              continue; // never surface empty or whitespace-bearing words
            }
            const known = best.get(word);
            if (known === undefined || total > known) {
              best.set(word, total);
            }
          }
        }
        open.sort((a, b) => b.logprob - a.logprob);
        frontier = open.slice(0, beamWidth);
      }
      const candidates = rankCandidates(
        [...best.entries()].map(([word, logprob]) => ({ word, logprob })),
      );
      return candidates.slice(0, Math.max(0, topK));
    },

    sequenceLogprob(words: readonly string[]): number {
      const context: string[] = [];
      let total = 0;
      for (const word of words) {
        const prefix: string[] = [];
        for (const piece of model.encode(word)) {
          total += model.pieceLogprob(context, prefix, piece);
          prefix.push(piece);
        }
        context.push(word);
      }
      return total;
    },
  };
}

export interface TableEntry {
  pieces: string[];
  logprobs: number[];
}

/**
 * Context-free piece model backed by a fixed table of piece chains, one per
 * word. Deterministic by construction; used for the demo model and tests.
 */
export class TablePieceModel implements PieceModel {
  private readonly entries: TableEntry[];
  private readonly suffix: string;

  constructor(entries: TableEntry[], continuationSuffix = "@@") {
    for (const entry of entries) {
      if (entry.pieces.length === 0 || entry.pieces.length !== entry.logprobs.length) {
        throw new RangeError("each table entry needs one logprob per piece");
      }
    }
    this.entries = entries;
    this.suffix = continuationSuffix;
  }

  private word(entry: TableEntry): string {
    return entry.pieces
      .map((piece) => (piece.endsWith(this.suffix) ? piece.slice(0, -this.suffix.length) : piece))
      .join("");
  }

  private startsWith(entry: TableEntry, prefix: readonly string[]): boolean {
    return (
      entry.pieces.length > prefix.length && prefix.every((piece, i) => entry.pieces[i] === piece)
    );
  }

  nextPieces(_context: readonly string[], prefix: readonly string[]): Piece[] {
    const seen = new Map<string, number>();
    for (const entry of this.entries) {
      if (!this.startsWith(entry, prefix)) {
        continue;
      }
      const piece = entry.pieces[prefix.length]!;
      const logprob = entry.logprobs[prefix.length]!;
      const known = seen.get(piece);
      if (known === undefined || logprob > known) {
        seen.set(piece, logprob);
      }
    }
    return [...seen.entries()].map(([piece, logprob]) => ({ piece, logprob }));
  }

  encode(word: string): string[] {
    for (const entry of this.entries) {
      if (this.word(entry) === word) {
        return [...entry.pieces];
      }
    }
    throw new Error(`cannot encode word: ${JSON.stringify(word)}`);
  }

  pieceLogprob(_context: readonly string[], prefix: readonly string[], piece: string): number {
    for (const entry of this.entries) {
      if (this.startsWith(entry, prefix) && entry.pieces[prefix.length] === piece) {
        return entry.logprobs[prefix.length]!;
      }
    }
    throw new Error(`unknown piece ${JSON.stringify(piece)} after ${JSON.stringify(prefix)}`);
  }
}

/** Small fixed table exercising single-piece, multi-piece, and over-deep chains. */
export function demoPieceModel(): TablePieceModel {
  return new TablePieceModel([
    { pieces: ["moon"], logprobs: [-1.25] },
    { pieces: ["night"], logprobs: [-2.0] },
    { pieces: ["riv@@", "er"], logprobs: [-0.5, -0.25] },
    { pieces: ["star@@", "light"], logprobs: [-1.0, -0.5] },
    { pieces: ["ev@@", "er@@", "more"], logprobs: [-1.0, -0.5, -0.25] },
    { pieces: ["wa@@", "nd@@", "er@@", "ing@@", "ly"], logprobs: [-0.25, -0.25, -0.25, -0.25, -0.25] },
  ]);
}
