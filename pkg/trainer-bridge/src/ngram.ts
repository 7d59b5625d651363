/**
 * Bigram model rebuilt from the serialized counts that ship with an ngram
 * weighted-dataset export. Add-one smoothing over the stored vocabulary;
 * conditioning is the previous token, unseen histories fall back to the
 * uniform smoothed row. This is a deliberate from-scratch reimplementation
 * used to cross-check the exporter's arithmetic.
 */
import { readFileSync } from "node:fs";

import { TOKENIZER_ID } from "./tokenizer.js";

export const MODEL_FORMAT = "s2k-bigram/1";

export class TokenizerMismatchError extends Error {}

export interface SerializedBigram {
  format: string;
  tokenizer_id: string;
  vocab: string[];
  counts: Record<string, Record<string, number>>;
}

export class BigramModel {
  readonly vocab: string[];
  private readonly index: Map<string, number>;
  private readonly counts: Record<string, Record<string, number>>;
  private readonly rowTotals: Map<string, number>;

  constructor(vocab: string[], counts: Record<string, Record<string, number>>) {
    this.vocab = vocab;
    this.index = new Map(vocab.map((tok, i) => [tok, i]));
    this.counts = counts;
    this.rowTotals = new Map(
      Object.entries(counts).map(([prev, row]) => [
        prev,
        Object.values(row).reduce((a, b) => a + b, 0),
      ]),
    );
  }

  static load(path: string): BigramModel {
    const payload = JSON.parse(readFileSync(path, "utf-8")) as SerializedBigram;
    if (payload.format !== MODEL_FORMAT) {
      throw new Error(`unexpected model format: ${payload.format}`);
    }
    if (payload.tokenizer_id !== TOKENIZER_ID) {
      throw new TokenizerMismatchError(
        `model tokenizer ${payload.tokenizer_id} != ${TOKENIZER_ID}`,
      );
    }
    return new BigramModel(payload.vocab, payload.counts);
  }

  tokenIndex(token: string): number {
    return this.index.get(token) ?? -1;
  }

  /** Add-one smoothed next-token probabilities in vocabulary order. */
  row(prev: string | null): Float64Array {
    const counts = prev !== null ? this.counts[prev] : undefined;
    const total = prev !== null ? (this.rowTotals.get(prev) ?? 0) : 0;
    const denom = total + this.vocab.length;
    const probs = new Float64Array(this.vocab.length);
    for (let i = 0; i < this.vocab.length; i++) {
      const c = counts?.[this.vocab[i]] ?? 0;
      probs[i] = (c + 1) / denom;
    }
    return probs;
  }
}
