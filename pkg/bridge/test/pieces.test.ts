import { describe, expect, it } from "vitest";

import { TablePieceModel, demoPieceModel, wrapPretrained } from "../src/pieces.js";

describe("wrapPretrained candidates", () => {
  it("assembles whole words with summed piece logprobs", () => {
    const model = wrapPretrained(demoPieceModel());
    const byWord = new Map(model.nextCandidates([], 100).map((c) => [c.word, c.logprob]));
    expect(byWord.get("moon")).toBe(-1.25);
    expect(byWord.get("river")).toBe(-0.5 + -0.25);
    expect(byWord.get("starlight")).toBe(-1.0 + -0.5);
    expect(byWord.get("evermore")).toBe(-1.0 + -0.5 + -0.25);
  });

  it("ranks by summed logprob, ties alphabetical, and honors topK", () => {
    const model = wrapPretrained(demoPieceModel());
    const words = model.nextCandidates([], 3).map((c) => c.word);
    expect(words).toEqual(["river", "moon", "starlight"]);
  });

  it("drops chains deeper than the piece cap", () => {
    const capped = wrapPretrained(demoPieceModel());
    const words = capped.nextCandidates([], 100).map((c) => c.word);
    expect(words).not.toContain("wanderingly"); // needs 5 pieces, cap is 4
    const deep = wrapPretrained(demoPieceModel(), { maxPieces: 5 });
    const deepWords = deep.nextCandidates([], 100).map((c) => c.word);
    expect(deepWords).toContain("wanderingly");
  });

  it("never surfaces continuation markers or whitespace in words", () => {
    const messy = new TablePieceModel([
      { pieces: ["odd word"], logprobs: [-0.5] },
      { pieces: ["riv@@", "er"], logprobs: [-0.5, -0.25] },
    ]);
    const candidates = wrapPretrained(messy).nextCandidates([], 100);
    for (const candidate of candidates) {
      expect(candidate.word).not.toMatch(/@@/);
      expect(candidate.word).not.toMatch(/\s/);
    }
    expect(candidates.map((c) => c.word)).toEqual(["river"]);
  });

  it("keeps the best-scoring chain when two produce the same word", () => {
    const forked = new TablePieceModel([
      { pieces: ["su@@", "n"], logprobs: [-2.0, -1.0] },
      { pieces: ["sun"], logprobs: [-0.5] },
    ]);
    const candidates = wrapPretrained(forked).nextCandidates([], 10);
    expect(candidates).toEqual([{ word: "sun", logprob: -0.5 }]);
  });

  it("rejects nonsense options", () => {
    expect(() => wrapPretrained(demoPieceModel(), { maxPieces: 0 })).toThrow(RangeError);
    expect(() => wrapPretrained(demoPieceModel(), { beamWidth: 0 })).toThrow(RangeError);
  });
});

describe("wrapPretrained scoring", () => {
  it("sums encoded piece logprobs across words", () => {
    const model = wrapPretrained(demoPieceModel());
    expect(model.sequenceLogprob(["river"])).toBe(-0.75);
    expect(model.sequenceLogprob(["moon", "river"])).toBe(-1.25 + -0.75);
    expect(model.sequenceLogprob([])).toBe(0);
  });

  it("refuses words the table cannot encode", () => {
    const model = wrapPretrained(demoPieceModel());
    expect(() => model.sequenceLogprob(["uncovered"])).toThrow(/cannot encode/);
  });
});

describe("TablePieceModel", () => {
  it("proposes exactly the continuations of the given prefix", () => {
    const table = demoPieceModel();
    const fromStart = table.nextPieces([], []).map((p) => p.piece);
    expect(fromStart).toContain("moon");
    expect(fromStart).toContain("riv@@");
    expect(fromStart).not.toContain("er");
    expect(table.nextPieces([], ["riv@@"])).toEqual([{ piece: "er", logprob: -0.25 }]);
    expect(table.nextPieces([], ["er"])).toEqual([]);
  });

  it("validates entry shape", () => {
    expect(() => new TablePieceModel([{ pieces: ["a"], logprobs: [] }])).toThrow(RangeError);
  });
});
