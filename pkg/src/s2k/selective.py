"""Per-token uncertainty weights for selective fine-tuning.

For each answer token, teacher-forced distributions give an entropy H in
[0, ln V]; tokens the model already predicts correctly are down-weighted to
H / ln V, while wrong predictions keep full weight:

    omega = (1 - correct) + correct * H / ln V
    loss  = (1 / N) * sum(omega * nll)     over the N answer tokens

Natural log throughout; the ln V normalization makes omega base-invariant as
long as one base is used consistently.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import NormalizationError, TokenizerMismatch, UnsupportedCapability
from .inference import Backend, PromptContext, TokenDistribution, require_teacher_forcing

_SUM_TOL = 1e-6


def entropy(dist: TokenDistribution, accept_truncated: bool = False) -> float:
    """Shannon entropy in nats, with 0*ln(0) taken as 0.

    Full-coverage distributions must sum to 1 within 1e-6. Top-k coverage is
    only accepted when the caller opted in; the remaining tail mass is lumped
    into a single outcome, which lower-bounds the true entropy.
    """
    total = sum(dist.probs)
    if dist.coverage == "full":
        if abs(total - 1.0) > _SUM_TOL:
            raise NormalizationError(f"full distribution sums to {total!r}")
        h = -sum(p * math.log(p) for p in dist.probs if p > 0.0)
    else:
        if not accept_truncated:
            raise UnsupportedCapability(
                "top-k distribution needs the truncation-accepted flag for entropy"
            )
        if total > 1.0 + _SUM_TOL:
            raise NormalizationError(f"top-k mass exceeds 1: {total!r}")
        h = -sum(p * math.log(p) for p in dist.probs if p > 0.0)
        tail = 1.0 - total
        if tail > 0.0:
            h -= tail * math.log(tail)
    return max(h, 0.0)


def weight(correct: int, h: float, v: int) -> float:
    if correct not in (0, 1):
        raise ValueError("correct must be 0 or 1")
    if v < 2:
        raise ValueError("vocabulary size must be >= 2")
    max_h = math.log(v)
    if h < -1e-9 or h > max_h + 1e-9:
        raise ValueError(f"entropy {h} outside [0, ln {v}]")
    h = min(max(h, 0.0), max_h)
    return (1 - correct) + correct * h / max_h


@dataclass(frozen=True)
class TokenWeightRecord:
    position: int
    target_token: str
    argmax_token: str
    correct: int
    H: float
    H_norm: float
    omega: float
    nll: float


@dataclass(frozen=True)
class WeightedExample:
    example_id: str
    prompt: str
    answer_tokens: tuple[str, ...]
    records: tuple[TokenWeightRecord, ...]
    loss_ref: float
    tokenizer_id: str
    entropy_mode: str = "full"  # full | truncated

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(r.omega for r in self.records)

    @property
    def nlls(self) -> tuple[float, ...]:
        return tuple(r.nll for r in self.records)


def weighted_loss(weights: list[float], nlls: list[float]) -> float:
    """Mean of omega * nll over the loss-masked-in tokens; 0 for empty examples."""
    if len(weights) != len(nlls):
        raise ValueError("weights and nlls must align")
    if not weights:
        return 0.0
    return sum(w * n for w, n in zip(weights, nlls)) / len(weights)


def annotate_example(
    example_id: str,
    prompt_ctx: PromptContext,
    answer_tokens: list[str],
    backend: Backend,
    accept_truncated: bool = False,
) -> WeightedExample:
    """One TokenWeightRecord per answer token; prompt tokens are loss-masked.

    Correctness is argmax-vs-target under teacher forcing, with the lowest
    vocabulary index winning argmax ties.
    """
    require_teacher_forcing(backend)
    dists = backend.score_teacher_forced(prompt_ctx, answer_tokens)
    if len(dists) != len(answer_tokens):
        raise UnsupportedCapability("backend returned misaligned teacher-forced distributions")
    records = []
    truncated = False
    for t, (token, dist) in enumerate(zip(answer_tokens, dists)):
        truncated = truncated or dist.coverage != "full"
        arg_idx = dist.argmax_index()
        argmax_token = dist.tokens[arg_idx]
        correct = 1 if token == argmax_token else 0
        h = entropy(dist, accept_truncated=accept_truncated)
        v = dist.V
        omega = weight(correct, min(h, math.log(v)), v)
        p_target = dist.prob_of(token)
        # tokens outside the backend vocabulary take the contract's fixed floor
        nll = -math.log(p_target) if p_target > 0 else 700.0
        records.append(
            TokenWeightRecord(
                position=t,
                target_token=token,
                argmax_token=argmax_token,
                correct=correct,
                H=h,
                H_norm=h / math.log(v),
                omega=omega,
                nll=nll,
            )
        )
    loss_ref = weighted_loss([r.omega for r in records], [r.nll for r in records])
    return WeightedExample(
        example_id=example_id,
        prompt=prompt_ctx.flatten(),
        answer_tokens=tuple(answer_tokens),
        records=tuple(records),
        loss_ref=loss_ref,
        tokenizer_id=backend.tokenizer.tokenizer_id,
        entropy_mode="truncated" if truncated else "full",
    )


def example_to_record(ex: WeightedExample) -> dict:
    return {
        "v": 1,
        "example_id": ex.example_id,
        "prompt": ex.prompt,
        "answer": list(ex.answer_tokens),
        "weights": list(ex.weights),
        "nll": list(ex.nlls),
        "loss_ref": ex.loss_ref,
    }


def export_weighted_dataset(
    examples: list[WeightedExample],
    path: str | Path,
    backend_descriptor: dict,
    config_hash: str,
    model_artifact: str | None = None,
) -> dict:
    """Write the JSONL contract plus a manifest; identical inputs give identical bytes."""
    path = Path(path)
    tokenizer_ids = {ex.tokenizer_id for ex in examples}
    if len(tokenizer_ids) > 1:
        raise TokenizerMismatch(f"mixed tokenizers in export: {sorted(tokenizer_ids)}")
    entropy_mode = "truncated" if any(ex.entropy_mode == "truncated" for ex in examples) else "full"
    lines = [
        json.dumps(example_to_record(ex), ensure_ascii=False, separators=(",", ":"), sort_keys=True)
        for ex in examples
    ]
    payload = "".join(line + "\n" for line in lines)
    path.write_text(payload, encoding="utf-8")
    manifest = {
        "v": 1,
        "examples": len(examples),
        "tokens": sum(len(ex.answer_tokens) for ex in examples),
        "tokenizer_id": next(iter(tokenizer_ids)) if tokenizer_ids else None,
        "entropy": entropy_mode,
        "backend": backend_descriptor,
        "config_hash": config_hash,
        "data_sha256": hashlib.sha256(payload.encode("utf-8")).hexdigest(),
    }
    if model_artifact is not None:
        manifest["model_artifact"] = model_artifact
    manifest_path = path.with_suffix(path.suffix + ".manifest.json")
    manifest_path.write_text(
        json.dumps(manifest, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    return manifest
