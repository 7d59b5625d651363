"""Order-2 (bigram) language model with add-one smoothing.

This is the built-in stand-in for a scoring model: it yields full next-token
distributions deterministically, with no learning framework. Conditioning uses
the last token of the flattened context; unseen histories fall back to the
uniform smoothed row.
"""
from __future__ import annotations

import hashlib
import json
from collections import Counter
from pathlib import Path

from ..errors import TokenizerMismatch
from ..tokenizers import EOS, WordTokenizer
from . import BackendDescriptor, PromptContext, TokenDistribution
from .mock import _LocalBackend

FORMAT = "s2k-bigram/1"


class BigramBackend(_LocalBackend):
    def __init__(self, vocab: list[str], counts: dict[str, dict[str, int]],
                 tokenizer: WordTokenizer | None = None):
        self.tokenizer = tokenizer or WordTokenizer()
        self.vocab: tuple[str, ...] = tuple(vocab)
        self.counts = counts
        self.row_totals = {prev: sum(row.values()) for prev, row in counts.items()}
        self.model_id = "bigram-" + hashlib.sha256(
            json.dumps({"vocab": vocab, "counts": counts}, sort_keys=True).encode("utf-8")
        ).hexdigest()[:12]
        self.descriptor = BackendDescriptor(
            kind="ngram",
            model_name=self.model_id,
            full_distributions=True,
            teacher_forcing=True,
        )

    @classmethod
    def train(cls, texts: list[str], tokenizer: WordTokenizer | None = None) -> "BigramBackend":
        tokenizer = tokenizer or WordTokenizer()
        counts: dict[str, Counter] = {}
        vocab_set: set[str] = set()
        for text in texts:
            tokens = tokenizer.encode(text)
            if not tokens:
                continue
            vocab_set.update(tokens)
            for prev, nxt in zip(tokens, tokens[1:] + [EOS]):
                counts.setdefault(prev, Counter())[nxt] += 1
        vocab = [EOS] + sorted(vocab_set)
        plain = {prev: dict(sorted(row.items())) for prev, row in sorted(counts.items())}
        return cls(vocab, plain, tokenizer=tokenizer)

    def dist_for(self, ctx: PromptContext) -> TokenDistribution:
        tokens = self.tokenizer.encode(ctx.flatten())
        prev = tokens[-1] if tokens else None
        return self.row_distribution(prev)

    def row_distribution(self, prev: str | None) -> TokenDistribution:
        row = self.counts.get(prev, {}) if prev is not None else {}
        total = self.row_totals.get(prev, 0) if prev is not None else 0
        denom = total + len(self.vocab)
        probs = tuple((row.get(tok, 0) + 1) / denom for tok in self.vocab)
        return TokenDistribution(self.vocab, probs)

    def save(self, path: str | Path) -> None:
        payload = {
            "format": FORMAT,
            "tokenizer_id": self.tokenizer.tokenizer_id,
            "vocab": list(self.vocab),
            "counts": self.counts,
        }
        Path(path).write_text(
            json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":")) + "\n",
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path: str | Path, tokenizer: WordTokenizer | None = None) -> "BigramBackend":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("format") != FORMAT:
            raise ValueError(f"unexpected model format: {payload.get('format')}")
        tokenizer = tokenizer or WordTokenizer()
        if payload["tokenizer_id"] != tokenizer.tokenizer_id:
            raise TokenizerMismatch(
                f"model was built with {payload['tokenizer_id']}, not {tokenizer.tokenizer_id}"
            )
        counts = {prev: {k: int(v) for k, v in row.items()} for prev, row in payload["counts"].items()}
        return cls(payload["vocab"], counts, tokenizer=tokenizer)
