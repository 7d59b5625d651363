/**
 * Weighted negative log-likelihood over logits, with analytic gradients:
 *
 *   loss = (1/N) * sum_t omega_t * (-ln softmax(logits_t)[target_t])
 *   dloss/dlogits_t = (omega_t / N) * (softmax(logits_t) - onehot(target_t))
 *
 * N counts the loss-masked-in tokens (the batch's answer tokens). With all
 * omega = 1 this is standard token-mean cross-entropy.
 */

export interface LossResult {
  loss: number;
  gradLogits: Float64Array[];
}

export function softmax(logits: Float64Array | number[]): Float64Array {
  let max = -Infinity;
  for (const x of logits) max = Math.max(max, x);
  const out = new Float64Array(logits.length);
  let total = 0;
  for (let i = 0; i < logits.length; i++) {
    out[i] = Math.exp(logits[i] - max);
    total += out[i];
  }
  for (let i = 0; i < out.length; i++) out[i] /= total;
  return out;
}

export function weightedNllFromLogits(
  logits: Float64Array[],
  targets: number[],
  weights: number[],
): LossResult {
  if (logits.length !== targets.length || targets.length !== weights.length) {
    throw new Error("logits, targets and weights must align");
  }
  const n = targets.length;
  const gradLogits = logits.map((row) => new Float64Array(row.length));
  if (n === 0) return { loss: 0, gradLogits };
  let loss = 0;
  for (let t = 0; t < n; t++) {
    const probs = softmax(logits[t]);
    const target = targets[t];
    loss += weights[t] * -Math.log(probs[target]);
    const scale = weights[t] / n;
    for (let v = 0; v < probs.length; v++) {
      gradLogits[t][v] = scale * (probs[v] - (v === target ? 1 : 0));
    }
  }
  return { loss: loss / n, gradLogits };
}

export function standardCrossEntropy(logits: Float64Array[], targets: number[]): number {
  return weightedNllFromLogits(logits, targets, targets.map(() => 1)).loss;
}

export function gradNorm(gradLogits: Float64Array[]): number {
  let total = 0;
  for (const row of gradLogits) {
    for (const g of row) total += g * g;
  }
  return Math.sqrt(total);
}
