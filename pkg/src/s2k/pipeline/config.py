"""TOML run configuration: defaults, range checks, unknown-key rejection."""
from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..errors import ConfigError
from ..reasoning import REASONING_TYPES


@dataclass(frozen=True)
class RunSection:
    seed: int = 42
    backend: str = "mock"
    max_workers: int = 1


@dataclass(frozen=True)
class CorpusSection:
    budget: int = 512
    clean_rules: str = ""


@dataclass(frozen=True)
class MetaqaSection:
    temperature: float = 0.7
    max_retries: int = 2
    limit: int = 0  # 0 = every chunk


@dataclass(frozen=True)
class FusionSection:
    W: int = 10
    C: float = 0.07
    L: int = 512


@dataclass(frozen=True)
class ReasoningSection:
    k: int = 10
    k1: float = 1.2
    b: float = 0.75
    types: tuple[str, ...] = REASONING_TYPES
    sampling: str = "relevance"
    quota: int = 0  # per type; 0 = unlimited
    seeds_limit: int = 0  # 0 = every question seeds generation


@dataclass(frozen=True)
class SelectiveSection:
    accept_truncated: bool = False


@dataclass(frozen=True)
class MetricsSection:
    k: int = 5


@dataclass(frozen=True)
class RemoteSection:
    base_url: str = ""
    model: str = ""
    timeout_ms: int = 30000
    retry_max: int = 3
    max_inflight: int = 4
    top_logprobs: int = 5
    vocab_size: int = 0


@dataclass(frozen=True)
class PipelineConfig:
    run: RunSection = field(default_factory=RunSection)
    corpus: CorpusSection = field(default_factory=CorpusSection)
    metaqa: MetaqaSection = field(default_factory=MetaqaSection)
    fusion: FusionSection = field(default_factory=FusionSection)
    reasoning: ReasoningSection = field(default_factory=ReasoningSection)
    selective: SelectiveSection = field(default_factory=SelectiveSection)
    metrics: MetricsSection = field(default_factory=MetricsSection)
    remote: RemoteSection = field(default_factory=RemoteSection)


_SECTIONS = {f.name: f.default_factory for f in fields(PipelineConfig)}  # type: ignore[misc]


def _coerce(section: str, key: str, default, value):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{section}.{key}", f"expected bool, got {type(value).__name__}")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{section}.{key}", f"expected int, got {type(value).__name__}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{section}.{key}", f"expected float, got {type(value).__name__}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{section}.{key}", f"expected string, got {type(value).__name__}")
        return value
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)) or not all(isinstance(x, str) for x in value):
            raise ConfigError(f"{section}.{key}", "expected a list of strings")
        return tuple(value)
    raise ConfigError(f"{section}.{key}", "unsupported config type")


def _validate_ranges(cfg: PipelineConfig) -> None:
    checks = [
        (cfg.corpus.budget >= 16, "corpus.budget", "must be >= 16"),
        (cfg.fusion.W >= 1, "fusion.W", "must be >= 1"),
        (cfg.fusion.L >= cfg.fusion.W, "fusion.L", "must be >= fusion.W"),
        (1 <= cfg.reasoning.k <= 10, "reasoning.k", "must be in 1..10"),
        (cfg.reasoning.k1 > 0, "reasoning.k1", "must be > 0"),
        (0.0 <= cfg.reasoning.b <= 1.0, "reasoning.b", "must be in [0, 1]"),
        (cfg.reasoning.quota >= 0, "reasoning.quota", "must be >= 0"),
        (cfg.reasoning.sampling in ("relevance", "random"), "reasoning.sampling",
         "must be 'relevance' or 'random'"),
        (cfg.metrics.k >= 1, "metrics.k", "must be >= 1"),
        (cfg.metaqa.max_retries >= 0, "metaqa.max_retries", "must be >= 0"),
        (cfg.run.max_workers >= 1, "run.max_workers", "must be >= 1"),
        (cfg.run.backend in ("mock", "ngram", "remote"), "run.backend",
         "must be mock, ngram or remote"),
        (cfg.remote.retry_max >= 0, "remote.retry_max", "must be >= 0"),
        (cfg.remote.max_inflight >= 1, "remote.max_inflight", "must be >= 1"),
    ]
    for ok, where, msg in checks:
        if not ok:
            raise ConfigError(where, msg)
    bad = [t for t in cfg.reasoning.types if t not in REASONING_TYPES]
    if bad:
        raise ConfigError("reasoning.types", f"unknown types {bad}; known: {list(REASONING_TYPES)}")


def config_from_dict(data: dict) -> PipelineConfig:
    sections = {}
    for section_name, value in data.items():
        if section_name not in _SECTIONS:
            raise ConfigError(section_name, "unknown config section")
        if not isinstance(value, dict):
            raise ConfigError(section_name, "expected a table")
        default_obj = _SECTIONS[section_name]()
        known = {f.name: getattr(default_obj, f.name) for f in fields(default_obj)}
        overrides = {}
        for key, raw in value.items():
            if key not in known:
                raise ConfigError(f"{section_name}.{key}", "unknown config key")
            overrides[key] = _coerce(section_name, key, known[key], raw)
        sections[section_name] = type(default_obj)(**{**known, **overrides})
    cfg = PipelineConfig(**sections)
    _validate_ranges(cfg)
    return cfg


def validate_config(path: str | Path | None) -> PipelineConfig:
    """Load a TOML config; an absent path or empty file yields all defaults."""
    if path is None:
        cfg = PipelineConfig()
        _validate_ranges(cfg)
        return cfg
    raw = Path(path).read_bytes()
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(path), f"invalid TOML: {exc}") from exc
    return config_from_dict(data)
