/**
 * Reward callback for policy-optimization rollouts, independently implementing
 * the scoring rules so parity against `s2k score-reward` is a real check:
 *
 *   accuracy: 5.0 when the answer after the LAST `ANSWER` marker matches gold
 *   format:   1.0 for one leading <think>...</think> block then exactly one
 *             marker in the tail; -0.5 whenever the marker appears twice or
 *             more anywhere (takes precedence); 0.0 otherwise
 *
 * Output lines reproduce the CLI's byte format: sorted keys, compact
 * separators, Python float repr (integral floats keep a trailing ".0").
 * Normalization is exact for ASCII answers.
 */

export const MARKER = "ANSWER";

const THINK_RE = /^\s*<think>([\s\S]*?)<\/think>([\s\S]*)$/;
const EDGE_LEAD = /^[\s:\-=.,;!?"'()\[\]{}]+/;
const EDGE_TRAIL = /[\s.,;!?"'()\[\]{}]+$/;

export interface RewardBreakdown {
  acc: number;
  fmt: number;
  total: number;
  extracted: string | null;
}

function countMarker(text: string): number {
  let count = 0;
  let idx = text.indexOf(MARKER);
  while (idx >= 0) {
    count += 1;
    idx = text.indexOf(MARKER, idx + MARKER.length);
  }
  return count;
}

function stripEdges(text: string): string {
  return text.replace(EDGE_LEAD, "").replace(EDGE_TRAIL, "");
}

export function normalizeAnswer(text: string, mcq: boolean): string {
  let cleaned = stripEdges(text.trim()).replace(/\s+/g, " ");
  if (mcq) {
    const space = cleaned.indexOf(" ");
    const first = space >= 0 ? cleaned.slice(0, space) : cleaned;
    return stripEdges(first).toUpperCase();
  }
  return cleaned.toLowerCase();
}

export function extractAnswer(text: string, mcq: boolean): string | null {
  const idx = text.lastIndexOf(MARKER);
  if (idx < 0) return null;
  const normalized = normalizeAnswer(text.slice(idx + MARKER.length), mcq);
  return normalized || null;
}

export function formatReward(text: string): number {
  if (countMarker(text) >= 2) return -0.5;
  const m = THINK_RE.exec(text);
  if (!m) return 0.0;
  const [, think, tail] = m;
  if (think.includes("<think>") || tail.includes("<think>") || tail.includes("</think>")) {
    return 0.0;
  }
  if (think.includes(MARKER)) return 0.0;
  if (countMarker(tail) !== 1) return 0.0;
  return 1.0;
}

function isMcqGold(gold: string): boolean {
  const g = gold.trim();
  return g.length === 1 && "ABCD".includes(g.toUpperCase());
}

export function accuracyReward(text: string, gold: string): number {
  const mcq = isMcqGold(gold);
  const extracted = extractAnswer(text, mcq);
  if (extracted === null) return 0.0;
  return extracted === normalizeAnswer(gold, mcq) ? 5.0 : 0.0;
}

export function totalReward(text: string, gold: string): RewardBreakdown {
  const mcq = isMcqGold(gold);
  const acc = accuracyReward(text, gold);
  const fmt = formatReward(text);
  return { acc, fmt, total: acc + fmt, extracted: extractAnswer(text, mcq) };
}

/** Python `repr(float)` for the values rewards produce: integral -> "5.0". */
export function pyFloat(x: number): string {
  if (Number.isInteger(x)) return x.toFixed(1);
  return String(x);
}

/** Byte-exact counterpart of one `s2k score-reward` output line (without newline). */
export function rewardLine(breakdown: RewardBreakdown): string {
  const extracted =
    breakdown.extracted === null ? "null" : JSON.stringify(breakdown.extracted);
  return (
    `{"acc":${pyFloat(breakdown.acc)},"extracted":${extracted},` +
    `"fmt":${pyFloat(breakdown.fmt)},"total":${pyFloat(breakdown.total)},"v":1}`
  );
}

/** The callback handed to a policy-optimization trainer: one reward per rollout. */
export function rewardCallback(texts: string[], golds: string[]): number[] {
  if (texts.length !== golds.length) throw new Error("texts and golds must align");
  return texts.map((text, i) => totalReward(text, golds[i]).total);
}
