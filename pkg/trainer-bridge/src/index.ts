export { batches, loadWeightedDataset } from "./dataset.js";
export type { ExportManifest, WeightedDataset, WeightedExample } from "./dataset.js";
export { BigramModel, TokenizerMismatchError } from "./ngram.js";
export { entropyOf, omega, recomputeExample, weightParity } from "./weights.js";
export type { ParityReport } from "./weights.js";
export { softmax, standardCrossEntropy, weightedNllFromLogits, gradNorm } from "./loss.js";
export { TabularModel, overfit, selectiveSftStep } from "./train.js";
export type { ToyExample, TrainReport } from "./train.js";
export {
  accuracyReward,
  extractAnswer,
  formatReward,
  normalizeAnswer,
  pyFloat,
  rewardCallback,
  rewardLine,
  totalReward,
} from "./rewards.js";
export { DEFAULT_RL, DEFAULT_SFT, makeConfig, validateConfig } from "./config.js";
export type { BridgeConfig, RlConfig, SftConfig } from "./config.js";
export { runS2k, scoreRewardViaCli } from "./cli.js";
export { TOKENIZER_ID, decode, encode } from "./tokenizer.js";
