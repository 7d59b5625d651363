/**
 * Loader for the weighted-dataset JSONL contract:
 *   {example_id, prompt, answer: [tokens], weights: [w], nll: [n], loss_ref, v}
 * plus its sidecar manifest (tokenizer id, backend descriptor, entropy mode,
 * optional serialized-model artifact). Prompt tokens are loss-masked by
 * construction: weights align 1:1 with answer tokens only.
 */
import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";

import { TokenizerMismatchError } from "./ngram.js";
import { TOKENIZER_ID } from "./tokenizer.js";

export interface WeightedExample {
  exampleId: string;
  prompt: string;
  answer: string[];
  weights: number[];
  nll: number[];
  lossRef: number;
}

export interface ExportManifest {
  examples: number;
  tokens: number;
  tokenizer_id: string;
  entropy: "full" | "truncated";
  backend: { kind: string; model_name: string };
  config_hash: string;
  data_sha256: string;
  model_artifact?: { path: string; sha256: string };
}

export interface WeightedDataset {
  examples: WeightedExample[];
  manifest: ExportManifest;
  modelPath: string | null;
}

export function loadWeightedDataset(dataPath: string): WeightedDataset {
  const manifest = JSON.parse(
    readFileSync(dataPath + ".manifest.json", "utf-8"),
  ) as ExportManifest;
  if (manifest.tokenizer_id !== TOKENIZER_ID) {
    throw new TokenizerMismatchError(
      `export tokenizer ${manifest.tokenizer_id} != training tokenizer ${TOKENIZER_ID}`,
    );
  }
  const examples: WeightedExample[] = [];
  for (const line of readFileSync(dataPath, "utf-8").split("\n")) {
    if (!line.trim()) continue;
    const rec = JSON.parse(line);
    const example: WeightedExample = {
      exampleId: rec.example_id,
      prompt: rec.prompt,
      answer: rec.answer,
      weights: rec.weights,
      nll: rec.nll,
      lossRef: rec.loss_ref,
    };
    if (
      example.weights.length !== example.answer.length ||
      example.nll.length !== example.answer.length
    ) {
      throw new Error(`misaligned weights for ${example.exampleId}`);
    }
    if (example.weights.some((w) => w < 0 || w > 1)) {
      throw new Error(`weights outside [0,1] for ${example.exampleId}`);
    }
    examples.push(example);
  }
  const modelPath = manifest.model_artifact
    ? join(dirname(dataPath), manifest.model_artifact.path)
    : null;
  return { examples, manifest, modelPath };
}

export function batches<T>(items: T[], size: number): T[][] {
  const out: T[][] = [];
  for (let i = 0; i < items.length; i += size) out.push(items.slice(i, i + size));
  return out;
}
