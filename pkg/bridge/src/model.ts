export interface Candidate {
  word: string;
  logprob: number;
}

export interface WordModel {
  nextCandidates(context: readonly string[], topK: number): Candidate[];
  sequenceLogprob(words: readonly string[]): number;
}

/** Orders by logprob descending, then word ascending, without mutating the input. */
export function rankCandidates(candidates: readonly Candidate[]): Candidate[] {
  return [...candidates].sort(
    (a, b) => b.logprob - a.logprob || (a.word < b.word ? -1 : a.word > b.word ? 1 : 0),
  );
}
