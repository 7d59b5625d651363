"""Word-level tokenization shared by chunking and every local backend.

One tokenizer instance is threaded through a whole run so that chunk budgets,
window proposals and teacher-forced scoring all count tokens the same way.
"""
from __future__ import annotations

import re

from .errors import TokenizerFailure

# Reserved end-of-sequence marker. Never produced by encode(); backends append
# it to training sequences and emit it to terminate generation.
EOS = "</s>"

_WORD_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


class WordTokenizer:
    """Deterministic word/punctuation splitter with space-join detokenization."""

    tokenizer_id = "word-v1"

    def encode(self, text: str) -> list[str]:
        if text is None:
            raise TokenizerFailure("cannot tokenize None")
        return _WORD_RE.findall(text)

    def decode(self, tokens: list[str]) -> str:
        return " ".join(tokens)

    def count(self, text: str) -> int:
        return len(self.encode(text))


def get_tokenizer(name: str = "word-v1") -> WordTokenizer:
    if name in ("word-v1", "word", "ws"):
        return WordTokenizer()
    raise TokenizerFailure(f"unknown tokenizer: {name}")
