import process from "node:process";

import { type WordModel } from "./model.js";
import { demoPieceModel, wrapPretrained } from "./pieces.js";
import { runServer } from "./server.js";
import { StubModel } from "./stub.js";

const USAGE = `usage: node main.js --stub | --pieces-demo [--max-pieces N]

Serves the newline-delimited JSON model protocol on stdio.
  --stub          deterministic hash-scored 16-word model
  --pieces-demo   fixed sub-word table aggregated into whole words
  --max-pieces N  longest piece chain per word for --pieces-demo (default 4)
`;

function selectModel(argv: string[]): WordModel {
  let stub = false;
  let piecesDemo = false;
  let maxPieces = 4;
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "--stub") {
      stub = true;
    } else if (arg === "--pieces-demo") {
      piecesDemo = true;
    } else if (arg === "--max-pieces") {
      const value = Number(argv[++i]);
      if (!Number.isInteger(value) || value < 1) {
        throw new Error(`--max-pieces needs a positive integer, got ${argv[i]}`);
      }
      maxPieces = value;
    } else {
      throw new Error(`unknown argument: ${arg}`);
    }
  }
  if (stub === piecesDemo) {
    throw new Error("pick exactly one of --stub or --pieces-demo");
  }
  return stub ? new StubModel() : wrapPretrained(demoPieceModel(), { maxPieces });
}

async function main(): Promise<number> {
  let model: WordModel;
  try {
    model = selectModel(process.argv.slice(2));
  } catch (error) {
    process.stderr.write(`${error instanceof Error ? error.message : String(error)}\n${USAGE}`);
    return 2;
  }
  await runServer(model, process.stdin, process.stdout);
  return 0;
}

main().then((code) => {
  process.exitCode = code;
});
