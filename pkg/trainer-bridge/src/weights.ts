/**
 * From-scratch recomputation of per-token selective weights from an export's
 * serialized bigram model:
 *
 *   H = -sum p ln p          (nats)
 *   omega = (1 - correct) + correct * H / ln V
 *
 * correct means the target token equals the row argmax (lowest index wins
 * ties). Conditioning replays teacher forcing: position 0 conditions on the
 * prompt's final token, later positions on the previous answer token. Targets
 * missing from the model vocabulary score the contract's out-of-vocabulary
 * nll floor of 700.
 */
import { BigramModel } from "./ngram.js";
import type { WeightedExample } from "./dataset.js";
import { lastToken } from "./tokenizer.js";

export const OOV_NLL = 700.0;

export function entropyOf(probs: Float64Array | number[]): number {
  let h = 0;
  for (const p of probs) {
    if (p > 0) h -= p * Math.log(p);
  }
  return Math.max(h, 0);
}

export function omega(correct: 0 | 1, h: number, vocabSize: number): number {
  const maxH = Math.log(vocabSize);
  const clamped = Math.min(Math.max(h, 0), maxH);
  return (1 - correct) + correct * (clamped / maxH);
}

export function argmaxLowestIndex(probs: Float64Array | number[]): number {
  let best = 0;
  for (let i = 1; i < probs.length; i++) {
    if (probs[i] > probs[best]) best = i;
  }
  return best;
}

export interface RecomputedToken {
  position: number;
  omega: number;
  nll: number;
  correct: 0 | 1;
}

export function recomputeExample(example: WeightedExample, model: BigramModel): RecomputedToken[] {
  const out: RecomputedToken[] = [];
  let prev = lastToken(example.prompt);
  for (let t = 0; t < example.answer.length; t++) {
    const target = example.answer[t];
    const probs = model.row(prev);
    const argmax = argmaxLowestIndex(probs);
    const correct: 0 | 1 = model.vocab[argmax] === target ? 1 : 0;
    const h = entropyOf(probs);
    const idx = model.tokenIndex(target);
    const nll = idx >= 0 ? -Math.log(probs[idx]) : OOV_NLL;
    out.push({ position: t, omega: omega(correct, h, model.vocab.length), nll, correct });
    prev = target;
  }
  return out;
}

export interface ParityReport {
  maxDeltaOmega: number;
  maxDeltaNll: number;
  worst: { exampleId: string; position: number } | null;
}

/** Max absolute deviation between exported weights and a fresh recomputation. */
export function weightParity(examples: WeightedExample[], model: BigramModel): ParityReport {
  let maxDeltaOmega = 0;
  let maxDeltaNll = 0;
  let worst: ParityReport["worst"] = null;
  for (const example of examples) {
    const recomputed = recomputeExample(example, model);
    for (const token of recomputed) {
      const dOmega = Math.abs(token.omega - example.weights[token.position]);
      const dNll = Math.abs(token.nll - example.nll[token.position]);
      if (dOmega > maxDeltaOmega) {
        maxDeltaOmega = dOmega;
        worst = { exampleId: example.exampleId, position: token.position };
      }
      maxDeltaNll = Math.max(maxDeltaNll, dNll);
    }
  }
  return { maxDeltaOmega, maxDeltaNll, worst };
}
