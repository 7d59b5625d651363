/**
 * Test fixtures produced through the primary toolchain's external interfaces:
 * a full mock-backend run over the bundled corpus, then a weighted export
 * computed by `s2k weight --backend ngram` over crafted traces whose answers
 * are in-vocabulary chunk prefixes (so correctness and entropy vary).
 */
import { execFileSync } from "node:child_process";
import { existsSync, mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { encode } from "../src/tokenizer.js";

export interface Fixtures {
  runDir: string;
  weightedPath: string;
  modelPath: string;
  chunksPath: string;
  questionsPath: string;
}

let cached: Fixtures | null = null;

function python(args: string[]): string {
  return execFileSync("python3", args, { encoding: "utf-8" }).trim();
}

function bundledPath(name: string): string {
  return python([
    "-c",
    `from importlib import resources; print(resources.files('s2k.data').joinpath('${name}'))`,
  ]);
}

export function readJsonl(path: string): any[] {
  return readFileSync(path, "utf-8")
    .split("\n")
    .filter((line) => line.trim())
    .map((line) => JSON.parse(line));
}

export function setupFixtures(): Fixtures {
  if (cached) return cached;
  const root = join(tmpdir(), `bridge-fixtures-${process.pid}`);
  const runDir = join(root, "run");
  mkdirSync(runDir, { recursive: true });
  const config = bundledPath("mock_run.toml");
  const corpus = bundledPath("corpus.jsonl");

  python(["-m", "s2k.cli", "run-all", "--config", config, "--corpus", corpus,
          "--run-dir", runDir]);

  // crafted traces: answers are chunk-token prefixes, guaranteed in-vocabulary
  const chunks = readJsonl(join(runDir, "chunks.jsonl"));
  const traces = chunks.slice(0, 12).map((chunk: any) => {
    const answer = encode(chunk.text).slice(0, 30);
    return {
      v: 1,
      question_id: `${chunk.chunk_id}#q0`,
      answer_text: answer.join(" "),
      segments: [],
      internal_fraction: 0.0,
      terminated_by: "length_cap",
    };
  });
  const parityDir = join(root, "parity");
  mkdirSync(parityDir, { recursive: true });
  const tracesPath = join(parityDir, "traces.jsonl");
  writeFileSync(tracesPath, traces.map((t) => JSON.stringify(t)).join("\n") + "\n");

  const weightedPath = join(parityDir, "weighted.jsonl");
  python(["-m", "s2k.cli", "weight",
          "--fused", tracesPath,
          "--questions", join(runDir, "questions.jsonl"),
          "--chunks", join(runDir, "chunks.jsonl"),
          "--backend", "ngram",
          "--config", config,
          "--out", weightedPath]);

  const modelPath = join(parityDir, "ngram_model.json");
  if (!existsSync(modelPath)) {
    throw new Error("expected the ngram export to serialize its model counts");
  }
  cached = {
    runDir,
    weightedPath,
    modelPath,
    chunksPath: join(runDir, "chunks.jsonl"),
    questionsPath: join(runDir, "questions.jsonl"),
  };
  return cached;
}
