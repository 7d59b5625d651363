"""Deterministic in-process backends for tests and the offline pipeline.

MockBackend serves three layers, checked in order:
  1. explicit next-token tables keyed by the flattened context string,
  2. canned text replies keyed by the flattened prompt,
  3. a procedural fallback that derives distributions and template-aware
     replies from a content hash, so a full pipeline run needs no fixtures.

ScriptedBackend serves position-indexed distributions that ignore the fused
prefix entirely (context-free), which is what margin-monotonicity arguments
need.
"""
from __future__ import annotations

import hashlib
import math
import random
import re

from ..tokenizers import EOS, WordTokenizer
from . import (
    BackendDescriptor,
    DecodeParams,
    PromptContext,
    TokenDistribution,
    WindowProposal,
)

# Marker used by fusion to introduce the supporting document segment. Scripted
# backends key off it to decide which script a context belongs to.
DOC_MARKER = "Document:"

_PSEUDO_WORDS = [
    "alvane", "borid", "cantrel", "dexin", "enoril", "fustate", "gremol",
    "hepcid", "ixatol", "jorvin", "kelpra", "lumexa", "mavrod", "neftin",
    "orpail", "pexor", "quandol", "ristel", "sovanil", "trubex", "uldra",
    "vexim", "wortal", "xenap", "ybrin", "zelcor", "binds", "blocks",
    "activates", "inhibits", "raises", "lowers", "enzyme", "receptor",
    "pathway", "dose", "tissue", "serum", "trial", "cohort", "marker",
    "response", "onset", "clearance", "uptake", "signal", "ratio", "phase",
]


def _hash_floats(key: str, n: int) -> list[float]:
    """n reproducible floats in [0, 1) derived from a content hash."""
    out = []
    counter = 0
    while len(out) < n:
        digest = hashlib.blake2b(f"{key}#{counter}".encode("utf-8"), digest_size=32).digest()
        for i in range(0, 32, 8):
            if len(out) >= n:
                break
            out.append(int.from_bytes(digest[i:i + 8], "big") / 2**64)
        counter += 1
    return out


def _pick(dist: TokenDistribution, decode: DecodeParams, step_key: str) -> int:
    if decode.greedy:
        return dist.argmax_index()
    rng = random.Random(f"{decode.seed}:{step_key}")
    weights = [p ** (1.0 / decode.temperature) for p in dist.probs]
    total = sum(weights)
    r = rng.random() * total
    acc = 0.0
    for i, w in enumerate(weights):
        acc += w
        if r <= acc:
            return i
    return len(weights) - 1


class _LocalBackend:
    """Shared greedy/sampled walking over a dist_for(ctx) implementation."""

    tokenizer: WordTokenizer

    def dist_for(self, ctx: PromptContext) -> TokenDistribution:  # pragma: no cover - abstract
        raise NotImplementedError

    def _extend(self, ctx: PromptContext, token_text: str) -> PromptContext:
        prefix = ctx.prefix_text
        new_prefix = f"{prefix} {token_text}".strip() if prefix else token_text
        return ctx.with_prefix(new_prefix)

    def propose_window(self, ctx: PromptContext, w: int, decode: DecodeParams) -> WindowProposal:
        if w < 1:
            raise ValueError("window size must be >= 1")
        ids: list[int] = []
        texts: list[str] = []
        logprobs: list[float] = []
        cur = ctx
        ended = False
        for step in range(w):
            dist = self.dist_for(cur)
            idx = _pick(dist, decode, f"{cur.flatten()}|{step}")
            tok = dist.tokens[idx]
            p = dist.probs[idx]
            ids.append(idx)
            texts.append(tok)
            logprobs.append(math.log(p) if p > 0 else -1e9)
            if tok == EOS:
                ended = True
                break
            cur = self._extend(cur, tok)
        return WindowProposal(tuple(ids), tuple(texts), tuple(min(lp, 0.0) for lp in logprobs), ended)

    def score_teacher_forced(self, ctx: PromptContext, targets: list[str]) -> list[TokenDistribution]:
        dists = []
        cur = ctx
        for tok in targets:
            dists.append(self.dist_for(cur))
            cur = self._extend(cur, tok)
        return dists

    def generate_text(self, ctx: PromptContext, decode: DecodeParams) -> str:
        proposal = self.propose_window(ctx, decode.max_tokens, decode)
        return self.tokenizer.decode(list(proposal.content_texts()))


class MockBackend(_LocalBackend):
    def __init__(
        self,
        tables: dict[str, dict[str, float]] | None = None,
        canned: dict[str, str] | None = None,
        seed: int = 0,
        procedural: bool | None = None,
        tokenizer: WordTokenizer | None = None,
        eos_ramp: int = 24,
    ):
        self.tables = tables or {}
        self.canned = canned or {}
        self.seed = seed
        # fixture-only mocks fail loudly on unknown contexts instead of inventing text
        self.procedural = procedural if procedural is not None else not (tables or canned)
        self.tokenizer = tokenizer or WordTokenizer()
        self.eos_ramp = eos_ramp
        self.calls = {"propose": 0, "score": 0, "generate": 0}

        table_tokens: set[str] = set()
        for row in self.tables.values():
            table_tokens.update(row)
        table_tokens.discard(EOS)
        self.vocab: tuple[str, ...] = (EOS, *sorted(table_tokens)) if self.tables else (
            EOS, *_PSEUDO_WORDS)
        self.descriptor = BackendDescriptor(
            kind="mock",
            model_name=f"mock-seed{seed}",
            full_distributions=True,
            teacher_forcing=True,
        )

    def dist_for(self, ctx: PromptContext) -> TokenDistribution:
        flat = ctx.flatten()
        if flat in self.tables:
            row = self.tables[flat]
            probs = tuple(row.get(tok, 0.0) for tok in self.vocab)
            return TokenDistribution(self.vocab, probs)
        if not self.procedural:
            raise KeyError(f"mock table has no entry for context: {flat!r}")
        return self._procedural_dist(ctx)

    def _procedural_dist(self, ctx: PromptContext) -> TokenDistribution:
        flat = ctx.flatten()
        raw = _hash_floats(f"dist:{self.seed}:{flat}", len(self.vocab))
        # sharpen so argmax is stable, then ramp EOS mass with answer length
        weights = [r ** 4 for r in raw]
        prefix_len = len(self.tokenizer.encode(ctx.prefix_text))
        eos_weight = max(weights) * (prefix_len / self.eos_ramp) ** 2
        weights[0] = eos_weight if prefix_len > 0 else 0.0
        total = sum(weights)
        return TokenDistribution(self.vocab, tuple(w / total for w in weights))

    # --- text generation -------------------------------------------------

    def propose_window(self, ctx, w, decode):
        self.calls["propose"] += 1
        return super().propose_window(ctx, w, decode)

    def score_teacher_forced(self, ctx, targets):
        self.calls["score"] += 1
        return super().score_teacher_forced(ctx, targets)

    def generate_text(self, ctx: PromptContext, decode: DecodeParams) -> str:
        self.calls["generate"] += 1
        flat = ctx.flatten()
        if flat in self.canned:
            return self.canned[flat]
        if not self.procedural:
            raise KeyError("mock has no canned reply for this prompt")
        if "question-generation expert" in flat:
            return self._meta_reply(flat)
        if "Reasoning Type Requirement: Inductive" in flat:
            return self._mcq_reply(flat, "inductive")
        if "Reasoning Type Requirement: Deductive" in flat:
            return self._mcq_reply(flat, "deductive")
        if "Reasoning Type Requirement: Case" in flat:
            return self._case_reply(flat)
        return super().generate_text(ctx, decode)

    def _content_words(self, flat: str, anchor: str, n: int) -> list[str]:
        body = flat.split(anchor, 1)[-1]
        words = [w for w in re.findall(r"[A-Za-z][A-Za-z0-9-]{3,}", body)]
        seen: list[str] = []
        for w in words:
            lw = w.lower()
            if lw not in (x.lower() for x in seen):
                seen.append(w)
            if len(seen) >= n:
                break
        return seen or ["this", "topic"]

    def _meta_reply(self, flat: str) -> str:
        words = self._content_words(flat, "## Document:", 5)
        h = _hash_floats(f"meta:{self.seed}:{flat}", 1)[0]
        starters = ["What is the role of", "How does", "Why does", "What effect does"]
        starter = starters[int(h * len(starters))]
        question = f"{starter} {' '.join(words[:3])} have in relation to {' '.join(words[3:5]) or 'its pathway'}?"
        return f'```json\n{{"question": "{question}"}}\n```'

    def _mcq_reply(self, flat: str, kind: str) -> str:
        words = self._content_words(flat, "### Input:", 8)
        h = _hash_floats(f"{kind}:{self.seed}:{flat}", 1)[0]
        gold = "ABCD"[int(h * 4)]
        stem = (
            f"A study examines {' '.join(words[:3])}. Given the reported findings on "
            f"{' '.join(words[3:6])}, which statement follows?"
        )
        options = {
            letter: f"{words[i % len(words)]} is {'unrelated to' if letter != gold else 'linked to'} {words[(i + 1) % len(words)]}"
            for i, letter in enumerate("ABCD")
        }
        lines = [stem, ""]
        lines += [f"{letter}. {text}" for letter, text in options.items()]
        lines += ["", f"Correct Answer: {gold}"]
        return "\n".join(lines)

    def _case_reply(self, flat: str) -> str:
        words = self._content_words(flat, "### Input:", 6)
        stem = (
            f"A practitioner reviews a case involving {' '.join(words[:3])} and compares it "
            f"with earlier reports of {' '.join(words[3:6])}. What explains the observation?"
        )
        gold = f"The observation is explained by the relation between {words[0]} and {words[-1]}"
        return f"{stem}\nCorrect Answer: {gold}"


class ScriptedBackend(_LocalBackend):
    """Context-free backend: distributions depend only on the output position.

    internal_script / external_script are per-position TokenDistribution lists;
    a context is treated as external when any user segment carries the document
    marker. Positions beyond the script end are a one-hot EOS.
    """

    def __init__(
        self,
        internal_script: list[TokenDistribution],
        external_script: list[TokenDistribution],
        tokenizer: WordTokenizer | None = None,
        doc_marker: str = DOC_MARKER,
    ):
        self.internal_script = internal_script
        self.external_script = external_script
        self.tokenizer = tokenizer or WordTokenizer()
        self.doc_marker = doc_marker
        self.descriptor = BackendDescriptor(
            kind="scripted",
            model_name="scripted",
            full_distributions=True,
            teacher_forcing=True,
        )

    def dist_for(self, ctx: PromptContext) -> TokenDistribution:
        external = any(t.startswith(self.doc_marker) for t in ctx.user_texts())
        script = self.external_script if external else self.internal_script
        pos = len(self.tokenizer.encode(ctx.prefix_text))
        if pos >= len(script):
            return TokenDistribution((EOS,), (1.0,))
        return script[pos]


def one_hot(vocab: tuple[str, ...], token: str) -> TokenDistribution:
    return TokenDistribution(vocab, tuple(1.0 if t == token else 0.0 for t in vocab))
