"""Window-based knowledge self-selection decoding.

Two contexts run in parallel: one sees only the question (internal knowledge),
one also sees the supporting document (external knowledge). Each step proposes
a window of tokens under both contexts, compares mean per-token log-probability
with a margin biased toward the external side, appends the winning window to
both contexts, and stops at EOS or the length cap.

Each proposal is scored under its own proposing context; means run over the
proposal's actual length, which may be shorter than the window when EOS lands
inside it or the remaining length budget is smaller.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

from .corpus import DocumentChunk
from .errors import S2KError
from .inference import (
    Backend,
    DecodeParams,
    PromptContext,
    ROLE_USER,
    context,
)
from .inference.mock import DOC_MARKER
from .metaqa import MetaQuestion

log = logging.getLogger("s2k.fusion")

INTERNAL = "internal"
EXTERNAL = "external"


@dataclass(frozen=True)
class FusionConfig:
    W: int = 10
    C: float = 0.07
    L: int = 512

    def __post_init__(self):
        if self.W < 1:
            raise ValueError("W must be >= 1")
        if self.L < self.W:
            raise ValueError("L must be >= W")


@dataclass(frozen=True)
class SegmentChoice:
    source: str
    tokens: tuple[str, ...]
    p_I: float
    p_E: float
    margin_used: float

    def __post_init__(self):
        if (self.source == INTERNAL) != (self.p_I >= self.p_E + self.margin_used):
            raise ValueError("segment source contradicts the selection inequality")


@dataclass(frozen=True)
class FusionTrace:
    question_id: str
    answer_text: str
    segments: tuple[SegmentChoice, ...]
    internal_fraction: float
    terminated_by: str  # eos | length_cap


class FusionInterrupted(S2KError):
    """Backend failure mid-fusion; carries the partial segments for resume/debugging."""

    def __init__(self, cause: Exception, partial: tuple[SegmentChoice, ...]):
        self.cause = cause
        self.partial = partial
        super().__init__(f"fusion interrupted after {len(partial)} segments: {cause}")


def internal_context(question: str, prefix: str = "") -> PromptContext:
    ctx = context((ROLE_USER, f"Question: {question}\nAnswer:"))
    return ctx.with_prefix(prefix) if prefix else ctx


def external_context(question: str, document: str, prefix: str = "") -> PromptContext:
    ctx = context(
        (ROLE_USER, f"{DOC_MARKER}\n{document}"),
        (ROLE_USER, f"Question: {question}\nAnswer:"),
    )
    return ctx.with_prefix(prefix) if prefix else ctx


def decide_window(p_i: float, p_e: float, c: float) -> str:
    """Internal wins at equality; the margin biases the comparison toward external."""
    return INTERNAL if p_i >= p_e + c else EXTERNAL


def fuse_answer(
    q: MetaQuestion,
    d: DocumentChunk,
    cfg: FusionConfig,
    backend: Backend,
    decode: DecodeParams = DecodeParams(),
) -> FusionTrace:
    segments: list[SegmentChoice] = []
    fused: list[str] = []
    terminated = "length_cap"
    try:
        while len(fused) < cfg.L:
            prefix = backend.tokenizer.decode(fused)
            ctx_i = internal_context(q.question, prefix)
            ctx_e = external_context(q.question, d.text, prefix)
            w = min(cfg.W, cfg.L - len(fused))
            t_i = backend.propose_window(ctx_i, w, decode)
            t_e = backend.propose_window(ctx_e, w, decode)
            source = decide_window(t_i.mean_logprob, t_e.mean_logprob, cfg.C)
            chosen = t_i if source == INTERNAL else t_e
            content = chosen.content_texts()
            segments.append(
                SegmentChoice(
                    source=source,
                    tokens=content,
                    p_I=t_i.mean_logprob,
                    p_E=t_e.mean_logprob,
                    margin_used=cfg.C,
                )
            )
            fused.extend(content)
            if chosen.ended:
                terminated = "eos"
                break
    except S2KError as exc:
        raise FusionInterrupted(exc, tuple(segments)) from exc

    internal_tokens = sum(len(s.tokens) for s in segments if s.source == INTERNAL)
    total_tokens = len(fused)
    return FusionTrace(
        question_id=q.question_id,
        answer_text=backend.tokenizer.decode(fused),
        segments=tuple(segments),
        internal_fraction=internal_tokens / total_tokens if total_tokens else 0.0,
        terminated_by=terminated,
    )


def decode_single_context(
    ctx: PromptContext,
    cfg: FusionConfig,
    backend: Backend,
    decode: DecodeParams = DecodeParams(),
) -> str:
    """Windowed greedy decode under one context; the C = +/-inf reference paths."""
    out: list[str] = []
    while len(out) < cfg.L:
        cur = ctx.with_prefix(backend.tokenizer.decode(out))
        proposal = backend.propose_window(cur, min(cfg.W, cfg.L - len(out)), decode)
        out.extend(proposal.content_texts())
        if proposal.ended:
            break
    return backend.tokenizer.decode(out)


def fuse_corpus(
    questions: list[MetaQuestion],
    chunks_by_id: dict[str, DocumentChunk],
    cfg: FusionConfig,
    backend: Backend,
    decode: DecodeParams = DecodeParams(),
    skip_ids: set[str] | None = None,
):
    """Fuse every question against its source chunk.

    Yields ("trace", FusionTrace) and ("error", (question_id, message)) items in
    input order; per-item failures are recorded and the run continues. Use
    summarize_traces() on the collected traces for the aggregate statistic.
    """
    skip_ids = skip_ids or set()
    for q in questions:
        if q.question_id in skip_ids:
            continue
        chunk = chunks_by_id.get(q.chunk_id)
        if chunk is None:
            yield "error", (q.question_id, f"unknown chunk {q.chunk_id}")
            continue
        try:
            yield "trace", fuse_answer(q, chunk, cfg, backend, decode)
        except FusionInterrupted as exc:
            log.warning("fusion failed for %s: %s", q.question_id, exc.cause)
            yield "error", (q.question_id, str(exc.cause))


def summarize_traces(traces: list[FusionTrace]) -> dict:
    summary: dict = {"traces": len(traces)}
    if traces:
        summary["internal_fraction_mean"] = sum(t.internal_fraction for t in traces) / len(traces)
    return summary


def trace_to_record(trace: FusionTrace) -> dict:
    return {
        "v": 1,
        "question_id": trace.question_id,
        "answer_text": trace.answer_text,
        "segments": [
            {
                "source": s.source,
                "text": " ".join(s.tokens),
                "p_I": s.p_I,
                "p_E": s.p_E,
            }
            for s in trace.segments
        ],
        "internal_fraction": trace.internal_fraction,
        "terminated_by": trace.terminated_by,
    }
