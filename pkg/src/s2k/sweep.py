"""Margin sweep: how the internal-token share of fused answers responds to C.

Real backends condition on the fused prefix, so moving C changes the prefix
and the later proposals with it; nothing guarantees a clean global trend. The
sweep therefore freezes context-free per-position scripts derived from bigram
statistics over the corpus, conditioned along each chunk's own token path:

  internal row  (counts + INTERNAL_SMOOTHING) / (total + INTERNAL_SMOOTHING*V)
  external row  (counts + DOC_BOOST*doc_counts + 1) / (total + DOC_BOOST*doc_total + V)

The external side folds the chunk's own bigram evidence into the corpus row
(the document usually sharpens the continuation, sometimes distracts from it);
the internal side is mildly sharpened so the two sides' peaks are comparable
and the per-window margins spread across the interesting C range. With fixed
scripts each window's decision is a pure threshold on C, so the mean internal
fraction is non-increasing in C by construction; the sweep shows how fast it
falls.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .corpus import DocumentChunk
from .fusion import FusionConfig, fuse_answer
from .inference import TokenDistribution
from .inference.mock import ScriptedBackend
from .inference.ngram import BigramBackend
from .metaqa import MetaQuestion
from .tokenizers import EOS, WordTokenizer

INTERNAL_SMOOTHING = 0.8  # add-k for internal rows; calibrated on the bundled corpus
DOC_BOOST = 2.0           # weight of chunk-local bigram counts in external rows


@dataclass(frozen=True)
class SweepPoint:
    C: float
    internal_fraction_mean: float
    questions: int


def _doc_rows(chunk_tokens: list[str]) -> dict[str, Counter]:
    rows: dict[str, Counter] = {}
    for prev, nxt in zip(chunk_tokens, chunk_tokens[1:] + [EOS]):
        rows.setdefault(prev, Counter())[nxt] += 1
    return rows


def _internal_distribution(base: BigramBackend, prev: str | None) -> TokenDistribution:
    row = base.counts.get(prev, {}) if prev is not None else {}
    total = base.row_totals.get(prev, 0) if prev is not None else 0
    denom = total + INTERNAL_SMOOTHING * len(base.vocab)
    probs = tuple((row.get(tok, 0) + INTERNAL_SMOOTHING) / denom for tok in base.vocab)
    return TokenDistribution(base.vocab, probs)


def _external_distribution(base: BigramBackend, doc_rows: dict[str, Counter],
                           prev: str | None) -> TokenDistribution:
    row = base.counts.get(prev, {}) if prev is not None else {}
    total = base.row_totals.get(prev, 0) if prev is not None else 0
    drow = doc_rows.get(prev, Counter()) if prev is not None else Counter()
    dtot = sum(drow.values())
    denom = total + DOC_BOOST * dtot + len(base.vocab)
    probs = tuple(
        (row.get(tok, 0) + DOC_BOOST * drow.get(tok, 0) + 1) / denom for tok in base.vocab
    )
    return TokenDistribution(base.vocab, probs)


def _mask_eos(dist: TokenDistribution) -> TokenDistribution:
    # EOS may only end a script, never win an interior argmax
    kept = [(t, p) for t, p in zip(dist.tokens, dist.probs) if t != EOS]
    total = sum(p for _, p in kept)
    return TokenDistribution(
        tuple(t for t, _ in kept), tuple(p / total for _, p in kept)
    )


def build_scripts(
    base: BigramBackend, chunk: DocumentChunk, max_positions: int
) -> tuple[list[TokenDistribution], list[TokenDistribution]]:
    """Per-position (internal, external) distributions along the chunk's token path."""
    path = base.tokenizer.encode(chunk.text)
    doc_rows = _doc_rows(path)
    internal: list[TokenDistribution] = []
    external: list[TokenDistribution] = []
    prev: str | None = None
    for tok in path[:max_positions]:
        internal.append(_mask_eos(_internal_distribution(base, prev)))
        external.append(_mask_eos(_external_distribution(base, doc_rows, prev)))
        prev = tok
    return internal, external


def sweep_margin(
    questions: list[MetaQuestion],
    chunks_by_id: dict[str, DocumentChunk],
    c_values: list[float],
    w: int = 10,
    max_positions: int = 64,
    tokenizer: WordTokenizer | None = None,
) -> list[SweepPoint]:
    tokenizer = tokenizer or WordTokenizer()
    base = BigramBackend.train([c.text for c in chunks_by_id.values()], tokenizer=tokenizer)
    scripted: list[tuple[MetaQuestion, DocumentChunk, ScriptedBackend]] = []
    for q in questions:
        chunk = chunks_by_id[q.chunk_id]
        internal, external = build_scripts(base, chunk, max_positions)
        if not internal:
            continue
        scripted.append((q, chunk, ScriptedBackend(internal, external, tokenizer=tokenizer)))

    points = []
    for c in c_values:
        fractions = []
        for q, chunk, backend in scripted:
            cfg = FusionConfig(W=w, C=c, L=max(w, max_positions))
            trace = fuse_answer(q, chunk, cfg, backend)
            fractions.append(trace.internal_fraction)
        points.append(
            SweepPoint(
                C=c,
                internal_fraction_mean=sum(fractions) / len(fractions) if fractions else 0.0,
                questions=len(fractions),
            )
        )
    return points
