/**
 * Word/punctuation tokenizer matching the dataset producer's "word-v1" scheme:
 * runs of word characters, or single non-space punctuation marks. Exact for
 * ASCII inputs, which is all the desk-scale exports contain.
 */
export const TOKENIZER_ID = "word-v1";

const WORD_RE = /[\p{L}\p{N}_]+|[^\p{L}\p{N}_\s]/gu;

export function encode(text: string): string[] {
  return text.match(WORD_RE) ?? [];
}

export function decode(tokens: string[]): string {
  return tokens.join(" ");
}

export function lastToken(text: string): string | null {
  const tokens = encode(text);
  return tokens.length ? tokens[tokens.length - 1] : null;
}
