/**
 * Selective fine-tuning steps on a tabular toy model: one trainable logits
 * row per (example, position). Weights are frozen from the export (computed
 * once against the pre-training snapshot, never refreshed mid-run); the
 * optimizer only sees the weighted NLL.
 */
import { writeFileSync } from "node:fs";

import { gradNorm, weightedNllFromLogits } from "./loss.js";

export interface ToyExample {
  targets: number[];
  weights: number[];
}

export class TabularModel {
  /** rows[i][t] holds the logits for example i, position t */
  rows: Float64Array[][];

  constructor(examples: ToyExample[], vocabSize: number) {
    this.rows = examples.map((ex) => ex.targets.map(() => new Float64Array(vocabSize)));
  }

  flatten(example: number): Float64Array[] {
    return this.rows[example];
  }
}

export interface StepResult {
  loss: number;
  gradNorm: number;
}

/** One full-batch selective-SFT step (plain gradient descent). */
export function selectiveSftStep(
  model: TabularModel,
  examples: ToyExample[],
  lr: number,
): StepResult {
  const logits: Float64Array[] = [];
  const targets: number[] = [];
  const weights: number[] = [];
  for (let i = 0; i < examples.length; i++) {
    for (let t = 0; t < examples[i].targets.length; t++) {
      logits.push(model.rows[i][t]);
      targets.push(examples[i].targets[t]);
      weights.push(examples[i].weights[t]);
    }
  }
  const { loss, gradLogits } = weightedNllFromLogits(logits, targets, weights);
  for (let row = 0; row < logits.length; row++) {
    for (let v = 0; v < logits[row].length; v++) {
      logits[row][v] -= lr * gradLogits[row][v];
    }
  }
  return { loss, gradNorm: gradNorm(gradLogits) };
}

export interface TrainReport {
  steps: number;
  initialLoss: number;
  finalLoss: number;
  reduction: number;
}

export function overfit(
  examples: ToyExample[],
  vocabSize: number,
  steps: number,
  lr: number,
  reportPath?: string,
  checkpointPath?: string,
): TrainReport {
  const model = new TabularModel(examples, vocabSize);
  let initialLoss = NaN;
  let finalLoss = NaN;
  for (let step = 0; step < steps; step++) {
    const { loss } = selectiveSftStep(model, examples, lr);
    if (step === 0) initialLoss = loss;
    finalLoss = loss;
  }
  const report: TrainReport = {
    steps,
    initialLoss,
    finalLoss,
    reduction: initialLoss > 0 ? 1 - finalLoss / initialLoss : 0,
  };
  if (reportPath) writeFileSync(reportPath, JSON.stringify(report, null, 2) + "\n");
  if (checkpointPath) {
    writeFileSync(
      checkpointPath,
      JSON.stringify(model.rows.map((ex) => ex.map((row) => Array.from(row)))) + "\n",
    );
  }
  return report;
}
