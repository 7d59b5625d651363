import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { beforeAll, describe, expect, it } from "vitest";

import { scoreRewardViaCli } from "../src/cli.js";
import {
  formatReward,
  rewardCallback,
  rewardLine,
  totalReward,
} from "../src/rewards.js";

interface Transcript {
  text: string;
  gold: string;
}

/** 50 deterministic transcripts spanning every reward class and edge. */
function fixtureTranscripts(): Transcript[] {
  const letters = ["A", "B", "C", "D"];
  const transcripts: Transcript[] = [];
  for (let i = 0; i < 10; i++) {
    const gold = letters[i % 4];
    transcripts.push({
      text: `<think>step ${i} of reasoning</think> ANSWER: ${gold.toLowerCase()}`,
      gold,
    });
  }
  for (let i = 0; i < 8; i++) {
    const gold = letters[i % 4];
    const wrong = letters[(i + 1) % 4];
    transcripts.push({ text: `<think>hmm ${i}</think> ANSWER: ${wrong}`, gold });
  }
  for (let i = 0; i < 8; i++) {
    const gold = letters[i % 4];
    transcripts.push({
      text: `<think>x</think> ANSWER: ${letters[(i + 1) % 4]} or ANSWER: ${gold}`,
      gold,
    });
  }
  for (let i = 0; i < 6; i++) {
    transcripts.push({ text: `bare reply ${i} ANSWER: (${letters[i % 4]}).`, gold: letters[i % 4] });
  }
  for (let i = 0; i < 6; i++) {
    transcripts.push({ text: `<think>ANSWER: ${letters[i % 4]}</think> after`, gold: "A" });
  }
  for (let i = 0; i < 6; i++) {
    transcripts.push({
      text: `<think>case ${i}</think>\nANSWER: The cause is a misfolded protein, item ${i}.`,
      gold: `the cause is a misfolded protein, item ${i}`,
    });
  }
  transcripts.push({ text: "no commitment at all", gold: "B" });
  transcripts.push({ text: "<think>only thought</think> nothing after", gold: "C" });
  transcripts.push({ text: "<think>t</think> ANSWER:    ", gold: "D" });
  transcripts.push({ text: "  \n<think>lead ws</think> ANSWER: d", gold: "D" });
  transcripts.push({ text: "<think>a</think><think>b</think> ANSWER: A", gold: "A" });
  transcripts.push({ text: "ANSWER ANSWER ANSWER", gold: "A" });
  return transcripts;
}

let transcripts: Transcript[];
let cliBytes: string;

beforeAll(() => {
  transcripts = fixtureTranscripts();
  expect(transcripts.length).toBe(50);
  const dir = mkdtempSync(join(tmpdir(), "bridge-rewards-"));
  const inPath = join(dir, "transcripts.jsonl");
  const outPath = join(dir, "rewards.jsonl");
  writeFileSync(inPath, transcripts.map((t) => JSON.stringify(t)).join("\n") + "\n");
  scoreRewardViaCli(inPath, outPath);
  cliBytes = readFileSync(outPath, "utf-8");
}, 60_000);

describe("reward callback parity with s2k score-reward", () => {
  it("byte-matches the CLI output for all 50 transcripts", () => {
    const mine = transcripts
      .map((t) => rewardLine(totalReward(t.text, t.gold)) + "\n")
      .join("");
    expect(mine).toBe(cliBytes);
  });

  it("covers every reachable total", () => {
    const totals = new Set(transcripts.map((t) => totalReward(t.text, t.gold).total));
    for (const expected of [6.0, 5.0, 4.5, 1.0, 0.0, -0.5]) {
      expect(totals).toContain(expected);
    }
  });

  it("callback returns one scalar per rollout", () => {
    const rewards = rewardCallback(
      transcripts.map((t) => t.text),
      transcripts.map((t) => t.gold),
    );
    expect(rewards.length).toBe(50);
    const parsed = cliBytes
      .trim()
      .split("\n")
      .map((line) => JSON.parse(line).total as number);
    expect(rewards).toEqual(parsed);
  });

  it("duplicate-marker penalty dominates", () => {
    expect(formatReward("ANSWER then ANSWER again")).toBe(-0.5);
  });
});
