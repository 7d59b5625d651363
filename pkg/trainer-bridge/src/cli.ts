/** Helpers for shelling out to the s2k CLI (the reward parity oracle). */
import { spawnSync } from "node:child_process";

export function runS2k(args: string[]): { stdout: string; stderr: string } {
  const proc = spawnSync("python3", ["-m", "s2k.cli", ...args], {
    encoding: "utf-8",
    maxBuffer: 64 * 1024 * 1024,
  });
  if (proc.status !== 0) {
    throw new Error(`s2k ${args[0]} failed (${proc.status}): ${proc.stderr}`);
  }
  return { stdout: proc.stdout, stderr: proc.stderr };
}

export function scoreRewardViaCli(transcriptsPath: string, outPath: string): void {
  runS2k(["score-reward", "--in", transcriptsPath, "--out", outPath]);
}
