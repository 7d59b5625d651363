"""Backend abstraction: window proposals, teacher-forced scoring, free generation.

Every backend exposes the same three calls over a PromptContext so the data
pipeline never cares whether tokens come from a lookup table, a bigram model
or a remote completion endpoint.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, runtime_checkable

from ..errors import UnsupportedCapability
from ..tokenizers import EOS, WordTokenizer

# Segment roles. The assistant prefix carries the partially fused answer and,
# when present, is always the last segment.
ROLE_SYSTEM = "system"
ROLE_USER = "user"
ROLE_ASSISTANT_PREFIX = "assistant_prefix"


@dataclass(frozen=True)
class PromptContext:
    """Ordered prompt segments; at most one assistant-prefix segment, always last."""

    segments: tuple[tuple[str, str], ...]

    def __post_init__(self):
        roles = [r for r, _ in self.segments]
        if roles.count(ROLE_ASSISTANT_PREFIX) > 1:
            raise ValueError("at most one assistant-prefix segment")
        if ROLE_ASSISTANT_PREFIX in roles and roles[-1] != ROLE_ASSISTANT_PREFIX:
            raise ValueError("assistant-prefix segment must be last")

    @property
    def prefix_text(self) -> str:
        for role, text in self.segments:
            if role == ROLE_ASSISTANT_PREFIX:
                return text
        return ""

    def base_text(self) -> str:
        return "\n".join(t for r, t in self.segments if r != ROLE_ASSISTANT_PREFIX)

    def flatten(self) -> str:
        """Deterministic flat prompt string: base segments, then the answer prefix."""
        flat = self.base_text()
        prefix = self.prefix_text
        if prefix:
            flat = flat + "\n" + prefix
        return flat

    def with_prefix(self, prefix: str) -> "PromptContext":
        base = tuple(s for s in self.segments if s[0] != ROLE_ASSISTANT_PREFIX)
        return PromptContext(base + ((ROLE_ASSISTANT_PREFIX, prefix),))

    def user_texts(self) -> list[str]:
        return [t for r, t in self.segments if r == ROLE_USER]


def context(*segments: tuple[str, str]) -> PromptContext:
    return PromptContext(tuple(segments))


@dataclass(frozen=True)
class DecodeParams:
    max_tokens: int = 512
    temperature: float = 0.0  # 0 means greedy
    seed: int = 0

    @property
    def greedy(self) -> bool:
        return self.temperature <= 0.0


@dataclass(frozen=True)
class WindowProposal:
    tokens: tuple[int, ...]
    texts: tuple[str, ...]
    logprobs: tuple[float, ...]
    ended: bool

    def __post_init__(self):
        if len(self.tokens) != len(self.logprobs) or len(self.tokens) != len(self.texts):
            raise ValueError("tokens, texts and logprobs must align")
        if any(lp > 1e-12 for lp in self.logprobs):
            raise ValueError("log-probabilities must be <= 0")
        if self.ended and (not self.texts or self.texts[-1] != EOS):
            raise ValueError("ended proposals must finish with EOS")

    @property
    def mean_logprob(self) -> float:
        return sum(self.logprobs) / len(self.logprobs)

    def content_texts(self) -> tuple[str, ...]:
        return self.texts[:-1] if self.ended else self.texts


@dataclass(frozen=True)
class TokenDistribution:
    """Next-token distribution in a fixed vocabulary order (index = token id)."""

    tokens: tuple[str, ...]
    probs: tuple[float, ...]
    coverage: str = "full"  # "full" or "top_k"
    k: int | None = None
    vocab_size: int | None = None  # declared V; defaults to len(tokens) for full coverage

    def __post_init__(self):
        if len(self.tokens) != len(self.probs):
            raise ValueError("tokens and probs must align")
        if any(p < 0 for p in self.probs):
            raise ValueError("probabilities must be non-negative")
        if self.coverage not in ("full", "top_k"):
            raise ValueError(f"bad coverage: {self.coverage}")

    @property
    def V(self) -> int:
        return self.vocab_size if self.vocab_size is not None else len(self.tokens)

    def prob_of(self, token: str) -> float:
        try:
            return self.probs[self.tokens.index(token)]
        except ValueError:
            return 0.0

    def argmax_index(self) -> int:
        # lowest index wins ties
        best, best_p = 0, self.probs[0]
        for i, p in enumerate(self.probs):
            if p > best_p:
                best, best_p = i, p
        return best


@dataclass(frozen=True)
class BackendDescriptor:
    kind: str  # mock | ngram | remote | scripted
    model_name: str
    full_distributions: bool
    teacher_forcing: bool

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "model_name": self.model_name,
            "capabilities": {
                "full_distributions": self.full_distributions,
                "teacher_forcing": self.teacher_forcing,
            },
        }


@runtime_checkable
class Backend(Protocol):
    descriptor: BackendDescriptor
    tokenizer: WordTokenizer

    def propose_window(self, ctx: PromptContext, w: int, decode: DecodeParams) -> WindowProposal: ...

    def score_teacher_forced(self, ctx: PromptContext, targets: list[str]) -> list[TokenDistribution]: ...

    def generate_text(self, ctx: PromptContext, decode: DecodeParams) -> str: ...


def require_teacher_forcing(backend: Backend) -> None:
    if not backend.descriptor.teacher_forcing:
        raise UnsupportedCapability(
            f"backend {backend.descriptor.model_name} does not support teacher forcing"
        )


def get_backend(name: str, *, seed: int = 0, train_texts: list[str] | None = None,
                tokenizer: WordTokenizer | None = None, remote_cfg=None):
    """Build a backend by config name. The ngram backend trains on train_texts."""
    tokenizer = tokenizer or WordTokenizer()
    if name == "mock":
        from .mock import MockBackend

        return MockBackend(seed=seed, tokenizer=tokenizer)
    if name == "ngram":
        from .ngram import BigramBackend

        if not train_texts:
            raise ValueError("ngram backend requires training texts")
        return BigramBackend.train(train_texts, tokenizer=tokenizer)
    if name == "remote":
        from .remote import RemoteBackend, RemoteConfig

        return RemoteBackend(remote_cfg or RemoteConfig(), tokenizer=tokenizer)
    raise ValueError(f"unknown backend: {name}")
