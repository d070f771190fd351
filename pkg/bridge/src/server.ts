import readline from "node:readline";

import { type WordModel } from "./model.js";

export const PROTOCOL_VERSION = "1";

export type Response = Record<string, unknown>;

function isStringArray(value: unknown): value is string[] {
  return Array.isArray(value) && value.every((item) => typeof item === "string");
}

function withId(request: Record<string, unknown>, body: Response): Response {
  // responses always carry the request's id when one was sent
  return "id" in request ? { id: request["id"], ...body } : body;
}

function failure(request: Record<string, unknown>, message: string): Response {
  return withId(request, { error: message });
}

/**
 * Handles one protocol line and returns the response object, or null for a
 * blank line. Every failure becomes an error response; the session survives.
 */
export function handleLine(model: WordModel, line: string): Response | null {
  if (!line.trim()) {
    return null;
  }
  let parsed: unknown;
  try {
    parsed = JSON.parse(line);
  } catch {
    return { error: `request is not valid JSON: ${line.trim().slice(0, 80)}` };
  }
  if (typeof parsed !== "object" || parsed === null || Array.isArray(parsed)) {
    return { error: "request must be a JSON object" };
  }
  const request = parsed as Record<string, unknown>;
  const op = request["op"];
  if (typeof op !== "string") {
    return failure(request, "request is missing the op field");
  }

  try {
    switch (op) {
      case "hello": {
        if (request["version"] !== PROTOCOL_VERSION) {
          return failure(
            request,
            `unsupported protocol version ${JSON.stringify(request["version"])}; this bridge speaks ${PROTOCOL_VERSION}`,
          );
        }
        return withId(request, { ok: true, version: PROTOCOL_VERSION });
      }
      case "next": {
        const context = request["context"];
        if (!isStringArray(context)) {
          return failure(request, "next needs a context array of strings");
        }
        const topK = request["top_k"];
        if (typeof topK !== "number" || !Number.isInteger(topK) || topK < 1) {
          return failure(request, "next needs an integer top_k >= 1");
        }
        const candidates = model
          .nextCandidates(context, topK)
          .map(({ word, logprob }) => ({ word, logprob }));
        return withId(request, { candidates });
      }
      case "score": {
        const words = request["words"];
        if (!isStringArray(words)) {
          return failure(request, "score needs a words array of strings");
        }
        return withId(request, { logprob: model.sequenceLogprob(words) });
      }
      default:
        return failure(request, `unsupported op: ${op}`);
    }
  } catch (error) {
    return failure(request, error instanceof Error ? error.message : String(error));
  }
}

/** Runs the line loop over arbitrary streams; resolves when the input ends. */
export function runServer(
  model: WordModel,
  input: NodeJS.ReadableStream,
  output: NodeJS.WritableStream,
): Promise<void> {
  const lines = readline.createInterface({ input, crlfDelay: Infinity, terminal: false });
  return new Promise((resolve) => {
    lines.on("line", (line) => {
      const response = handleLine(model, line);
      if (response !== null) {
        output.write(`${JSON.stringify(response)}\n`);
      }
    });
    lines.on("close", resolve);
  });
}
