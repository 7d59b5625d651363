"""Deterministic rollout rewards: accuracy plus format, summed.

Accuracy pays 5.0 when the answer extracted after the LAST `ANSWER` marker
matches gold, else 0.0. Format pays 1.0 for exactly one leading
<think>...</think> block followed by a tail holding the marker exactly once;
emitting `ANSWER` more than once anywhere is scored -0.5 (the duplicate-answer
penalty takes precedence); any other violation is 0.0.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

MARKER = "ANSWER"  # exact ASCII, case-sensitive

_THINK_RE = re.compile(r"^\s*<think>(.*?)</think>(.*)$", re.DOTALL)
_PUNCT_EDGE_RE = re.compile(r"^[\s:\-=.,;!?\"'()\[\]{}]+|[\s.,;!?\"'()\[\]{}]+$")


@dataclass(frozen=True)
class RewardBreakdown:
    acc: float
    fmt: float
    total: float
    extracted: str | None

    def to_dict(self) -> dict:
        return {"acc": self.acc, "fmt": self.fmt, "total": self.total, "extracted": self.extracted}


def normalize_answer(text: str, mcq: bool) -> str:
    cleaned = _PUNCT_EDGE_RE.sub("", text.strip())
    cleaned = re.sub(r"\s+", " ", cleaned)
    if mcq:
        first = cleaned.split(" ", 1)[0] if cleaned else ""
        return _PUNCT_EDGE_RE.sub("", first).upper()
    return cleaned.casefold()


def extract_answer(text: str, mcq: bool) -> str | None:
    idx = text.rfind(MARKER)
    if idx < 0:
        return None
    tail = text[idx + len(MARKER):]
    normalized = normalize_answer(tail, mcq)
    return normalized or None


def format_reward(text: str) -> float:
    if text.count(MARKER) >= 2:
        return -0.5
    m = _THINK_RE.match(text)
    if not m:
        return 0.0
    think, tail = m.group(1), m.group(2)
    if "<think>" in think or "<think>" in tail or "</think>" in tail:
        return 0.0
    if MARKER in think:  # marker must come after the reasoning block
        return 0.0
    if tail.count(MARKER) != 1:
        return 0.0
    return 1.0


def accuracy_reward(text: str, gold: str) -> float:
    mcq = _is_mcq_gold(gold)
    extracted = extract_answer(text, mcq)
    if extracted is None:
        return 0.0
    return 5.0 if extracted == normalize_answer(gold, mcq) else 0.0


def total_reward(text: str, gold: str) -> RewardBreakdown:
    mcq = _is_mcq_gold(gold)
    acc = accuracy_reward(text, gold)
    fmt = format_reward(text)
    return RewardBreakdown(
        acc=acc,
        fmt=fmt,
        total=acc + fmt,
        extracted=extract_answer(text, mcq),
    )


def _is_mcq_gold(gold: str) -> bool:
    return len(gold.strip()) == 1 and gold.strip().upper() in "ABCD"


def score_record(rec: dict) -> dict:
    breakdown = total_reward(rec["text"], rec["gold"])
    out = {"v": 1}
    out.update(breakdown.to_dict())
    return out
