/** Training configuration with the published defaults for both phases. */

export interface SftConfig {
  finetuningType: "lora";
  loraRank: number;
  batchSize: number;
  learningRate: number;
  epochs: number;
  scheduler: "cosine" | "linear" | "constant";
  warmupRatio: number;
}

export interface RlConfig {
  epochs: number;
  learningRate: number;
  sequenceLength: number;
  warmupRatio: number;
  globalBatchSize: number;
  rolloutBatchSize: number;
  maxPromptLength: number;
  maxResponseLength: number;
  klCoefficient: number;
  seed: number;
  temperature: number;
  topP: number;
  maxGradNorm: number;
}

export interface BridgeConfig {
  model: string;
  sft: SftConfig;
  rl: RlConfig;
  /** config_hash of the primary export this run trains against */
  datasetConfigHash: string;
}

export const DEFAULT_SFT: SftConfig = {
  finetuningType: "lora",
  loraRank: 8,
  batchSize: 32,
  learningRate: 1e-3,
  epochs: 1.0,
  scheduler: "cosine",
  warmupRatio: 0.1,
};

export const DEFAULT_RL: RlConfig = {
  epochs: 2,
  learningRate: 5e-6,
  sequenceLength: 4096,
  warmupRatio: 0.1,
  globalBatchSize: 1,
  rolloutBatchSize: 8,
  maxPromptLength: 512,
  maxResponseLength: 2048,
  klCoefficient: 0.04,
  seed: 42,
  temperature: 0.9,
  topP: 1.0,
  maxGradNorm: 0.1,
};

export function makeConfig(
  model: string,
  datasetConfigHash: string,
  sft: Partial<SftConfig> = {},
  rl: Partial<RlConfig> = {},
): BridgeConfig {
  const config: BridgeConfig = {
    model,
    sft: { ...DEFAULT_SFT, ...sft },
    rl: { ...DEFAULT_RL, ...rl },
    datasetConfigHash,
  };
  validateConfig(config);
  return config;
}

export function validateConfig(config: BridgeConfig): void {
  const { sft, rl } = config;
  const checks: Array<[boolean, string]> = [
    [config.model.length > 0, "model must be non-empty"],
    [sft.loraRank >= 1, "sft.loraRank must be >= 1"],
    [sft.batchSize >= 1, "sft.batchSize must be >= 1"],
    [sft.learningRate > 0, "sft.learningRate must be > 0"],
    [sft.epochs > 0, "sft.epochs must be > 0"],
    [sft.warmupRatio >= 0 && sft.warmupRatio <= 1, "sft.warmupRatio must be in [0,1]"],
    [rl.epochs >= 1, "rl.epochs must be >= 1"],
    [rl.learningRate > 0, "rl.learningRate must be > 0"],
    [rl.rolloutBatchSize >= 1, "rl.rolloutBatchSize must be >= 1"],
    [rl.klCoefficient >= 0, "rl.klCoefficient must be >= 0"],
    [rl.temperature > 0, "rl.temperature must be > 0"],
    [rl.topP > 0 && rl.topP <= 1, "rl.topP must be in (0,1]"],
    [rl.maxGradNorm > 0, "rl.maxGradNorm must be > 0"],
  ];
  for (const [ok, message] of checks) {
    if (!ok) throw new Error(message);
  }
}
