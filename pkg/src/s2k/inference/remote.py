"""Client for a completions endpoint that echoes per-token log-probabilities.

Wire shape (vendor-neutral): POST {base_url}/completions with
  {"model", "prompt", "max_tokens", "temperature", "echo", "logprobs"}
and receive
  {"tokens": [...], "token_logprobs": [...], "top_logprobs": [{tok: lp}, ...],
   "finish_reason": "stop"|"length", "text": "..."}.

Teacher forcing is echo-scoring: the prompt plus targets are submitted with
echo=true and the final target positions are read back. Requests are bounded
by an in-flight semaphore and retried with exponential backoff; after
retry_max failures a typed BackendUnavailable is raised so the pipeline never
hangs.
"""
from __future__ import annotations

import logging
import math
import os
import threading
import time
from dataclasses import dataclass

import httpx

from ..errors import BackendUnavailable, ContextTooLong
from ..tokenizers import EOS, WordTokenizer
from . import (
    BackendDescriptor,
    DecodeParams,
    PromptContext,
    TokenDistribution,
    WindowProposal,
)

log = logging.getLogger("s2k.remote")

API_KEY_ENV = "S2K_API_KEY"
_RETRYABLE_STATUS = {429, 500, 502, 503, 504}


@dataclass(frozen=True)
class RemoteConfig:
    base_url: str = "http://localhost:8000"
    model: str = "remote-model"
    timeout_ms: int = 30000
    retry_max: int = 3
    backoff_base_s: float = 0.2
    max_inflight: int = 4
    top_logprobs: int = 5
    vocab_size: int = 0  # declared V for truncated-entropy accounting; 0 = unknown


class RemoteBackend:
    def __init__(self, cfg: RemoteConfig, tokenizer: WordTokenizer | None = None,
                 transport: httpx.BaseTransport | None = None):
        self.cfg = cfg
        self.tokenizer = tokenizer or WordTokenizer()
        self._sem = threading.BoundedSemaphore(cfg.max_inflight)
        self.retries_used = 0
        headers = {}
        api_key = os.environ.get(API_KEY_ENV)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self._client = httpx.Client(
            base_url=cfg.base_url,
            timeout=cfg.timeout_ms / 1000.0,
            headers=headers,
            transport=transport,
        )
        self.descriptor = BackendDescriptor(
            kind="remote",
            model_name=cfg.model,
            full_distributions=False,
            teacher_forcing=True,
        )

    def close(self) -> None:
        self._client.close()

    def _post(self, payload: dict) -> dict:
        last_error: Exception | None = None
        for attempt in range(self.cfg.retry_max + 1):
            if attempt > 0:
                delay = self.cfg.backoff_base_s * (2 ** (attempt - 1))
                log.info("retrying completion request (attempt %d) after %.2fs", attempt, delay)
                self.retries_used += 1
                time.sleep(delay)
            try:
                with self._sem:
                    resp = self._client.post("/completions", json=payload)
            except httpx.HTTPError as exc:
                last_error = exc
                continue
            if resp.status_code == 200:
                return resp.json()
            if resp.status_code in (400, 413):
                body = resp.text.lower()
                if "context" in body or resp.status_code == 413:
                    raise ContextTooLong(resp.text[:200])
                raise BackendUnavailable(f"bad request: {resp.text[:200]}")
            if resp.status_code not in _RETRYABLE_STATUS:
                raise BackendUnavailable(f"status {resp.status_code}: {resp.text[:200]}")
            last_error = BackendUnavailable(f"status {resp.status_code}")
        raise BackendUnavailable(
            f"completion request failed after {self.cfg.retry_max} retries: {last_error}"
        )

    def propose_window(self, ctx: PromptContext, w: int, decode: DecodeParams) -> WindowProposal:
        data = self._post({
            "model": self.cfg.model,
            "prompt": ctx.flatten(),
            "max_tokens": w,
            "temperature": decode.temperature,
            "echo": False,
            "logprobs": self.cfg.top_logprobs,
        })
        texts = [EOS if t in ("</s>", "<|endoftext|>") else t for t in data["tokens"]]
        logprobs = [min(float(lp), 0.0) for lp in data["token_logprobs"]]
        ended = data.get("finish_reason") == "stop"
        if ended and (not texts or texts[-1] != EOS):
            texts.append(EOS)
            logprobs.append(0.0)
        ids = tuple(range(len(texts)))  # positional; the wire exposes no vocabulary ids
        return WindowProposal(ids, tuple(texts), tuple(logprobs), ended)

    def score_teacher_forced(self, ctx: PromptContext, targets: list[str]) -> list[TokenDistribution]:
        if not targets:
            return []
        prefix = ctx.flatten()
        full = prefix + " " + self.tokenizer.decode(targets)
        data = self._post({
            "model": self.cfg.model,
            "prompt": full,
            "max_tokens": 0,
            "temperature": 0.0,
            "echo": True,
            "logprobs": self.cfg.top_logprobs,
        })
        tops = data["top_logprobs"][-len(targets):]
        dists = []
        for entry in tops:
            items = sorted(entry.items(), key=lambda kv: (-kv[1], kv[0]))
            tokens = tuple(tok for tok, _ in items)
            probs = tuple(math.exp(lp) for _, lp in items)
            dists.append(TokenDistribution(
                tokens, probs,
                coverage="top_k",
                k=len(tokens),
                vocab_size=self.cfg.vocab_size or None,
            ))
        return dists

    def generate_text(self, ctx: PromptContext, decode: DecodeParams) -> str:
        data = self._post({
            "model": self.cfg.model,
            "prompt": ctx.flatten(),
            "max_tokens": decode.max_tokens,
            "temperature": decode.temperature,
            "echo": False,
            "logprobs": 0,
        })
        if "text" in data:
            return data["text"]
        tokens = [t for t in data["tokens"] if t not in ("</s>", "<|endoftext|>")]
        return self.tokenizer.decode(tokens)
