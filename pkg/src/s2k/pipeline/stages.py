"""Stage orchestration: chunk -> metaqa -> fuse -> reason -> weight.

A stage is skipped when its manifest exists and both its parameter hash and
its input digests are unchanged; edited intermediates therefore invalidate
only downstream stages. Within a stage, items resume from the progress log,
so a crash never recomputes finished items.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

from .. import fusion as fusion_mod
from ..corpus import (
    CleaningConfig,
    chunk_from_record,
    chunk_to_record,
    clean_document,
    load_documents,
    segment_corpus,
)
from ..errors import EmptyAfterCleaning, StaleInput
from ..inference import DecodeParams, get_backend
from ..inference.ngram import BigramBackend
from ..metaqa import Filtered, generate_meta_question, question_from_record, question_to_record
from ..reasoning import REASONING_TYPES, generate_reasoning_set, qa_to_record
from ..selective import annotate_example, example_to_record
from ..tokenizers import WordTokenizer
from .config import PipelineConfig
from .manifest import (
    StageProgress,
    atomic_write_json,
    build_manifest,
    hash_params,
    load_manifest,
    manifest_path,
    read_jsonl,
    sha256_bytes,
    sha256_file,
)

log = logging.getLogger("s2k.pipeline")

STAGE_ORDER = ("chunk", "metaqa", "fuse", "reason", "weight")

OUTPUT_FILES = {
    "chunk": "chunks.jsonl",
    "metaqa": "questions.jsonl",
    "fuse": "traces.jsonl",
    "reason": "reasoning.jsonl",
    "weight": "weighted.jsonl",
}

# input name -> producing stage (None = the raw corpus provided by the caller)
INPUTS = {
    "chunk": {"corpus": None},
    "metaqa": {"chunks": "chunk"},
    "fuse": {"chunks": "chunk", "questions": "metaqa"},
    "reason": {"chunks": "chunk", "questions": "metaqa"},
    "weight": {"chunks": "chunk", "questions": "metaqa", "traces": "fuse"},
}


@dataclass(frozen=True)
class StageResult:
    stage: str
    status: str  # computed | skipped
    manifest: dict


def stage_params(cfg: PipelineConfig, stage: str, clean_rules_digest: str = "") -> dict:
    common = {"seed": cfg.run.seed, "backend": cfg.run.backend}
    if stage == "chunk":
        return {
            "budget": cfg.corpus.budget,
            "clean_rules": clean_rules_digest,
            "tokenizer": WordTokenizer.tokenizer_id,
        }
    if stage == "metaqa":
        return {
            **common,
            "temperature": cfg.metaqa.temperature,
            "max_retries": cfg.metaqa.max_retries,
            "limit": cfg.metaqa.limit,
        }
    if stage == "fuse":
        return {**common, "W": cfg.fusion.W, "C": cfg.fusion.C, "L": cfg.fusion.L}
    if stage == "reason":
        r = cfg.reasoning
        return {
            **common,
            "k": r.k, "k1": r.k1, "b": r.b, "types": list(r.types),
            "sampling": r.sampling, "quota": r.quota, "seeds_limit": r.seeds_limit,
        }
    if stage == "weight":
        return {**common, "accept_truncated": cfg.selective.accept_truncated}
    raise ValueError(f"unknown stage: {stage}")


def _build_backend(cfg: PipelineConfig, run_dir: Path):
    name = cfg.run.backend
    if name == "ngram":
        chunks = [chunk_from_record(r) for r in read_jsonl(run_dir / OUTPUT_FILES["chunk"])]
        return get_backend("ngram", train_texts=[c.text for c in chunks])
    if name == "remote":
        from ..inference.remote import RemoteConfig

        r = cfg.remote
        return get_backend("remote", remote_cfg=RemoteConfig(
            base_url=r.base_url, model=r.model, timeout_ms=r.timeout_ms,
            retry_max=r.retry_max, max_inflight=r.max_inflight,
            top_logprobs=r.top_logprobs, vocab_size=r.vocab_size,
        ))
    return get_backend("mock", seed=cfg.run.seed)


def _clean_rules(cfg: PipelineConfig) -> tuple[CleaningConfig, str]:
    if cfg.corpus.clean_rules:
        import sys
        if sys.version_info >= (3, 11):
            import tomllib
        else:
            import tomli as tomllib
        raw = Path(cfg.corpus.clean_rules).read_bytes()
        rules = CleaningConfig.from_dict(tomllib.loads(raw.decode("utf-8")))
        return rules, sha256_bytes(raw)
    return CleaningConfig(), "builtin"


# --- stage runners ---------------------------------------------------------

def _run_chunk(cfg, inputs, out_path, backend, progress: StageProgress):
    rules, _ = _clean_rules(cfg)
    tokenizer = WordTokenizer()
    done = progress.completed_ids()
    for doc in load_documents(inputs["corpus"]):
        if doc.doc_id in done:
            continue
        try:
            cleaned = clean_document(doc, rules)
        except EmptyAfterCleaning:
            progress.record_skip(doc.doc_id, "filtered", "empty_after_cleaning")
            continue
        chunks = segment_corpus(cleaned, cfg.corpus.budget, tokenizer)
        progress.record_ok_many(doc.doc_id, [chunk_to_record(c) for c in chunks])
    return {}, None


def _run_metaqa(cfg, inputs, out_path, backend, progress: StageProgress):
    chunks = [chunk_from_record(r) for r in read_jsonl(inputs["chunks"])]
    if cfg.metaqa.limit:
        chunks = chunks[: cfg.metaqa.limit]
    decode = DecodeParams(max_tokens=256, temperature=cfg.metaqa.temperature, seed=cfg.run.seed)
    done = progress.completed_ids()
    for chunk in chunks:
        if chunk.chunk_id in done:
            continue
        result = generate_meta_question(chunk, backend, decode, cfg.metaqa.max_retries)
        if isinstance(result, Filtered):
            progress.record_skip(chunk.chunk_id, "filtered", result.reason)
        else:
            progress.record_ok(chunk.chunk_id, question_to_record(result))
    return {}, None


def _run_fuse(cfg, inputs, out_path, backend, progress: StageProgress):
    chunks = {c.chunk_id: c for c in map(chunk_from_record, read_jsonl(inputs["chunks"]))}
    questions = [question_from_record(r) for r in read_jsonl(inputs["questions"])]
    fcfg = fusion_mod.FusionConfig(W=cfg.fusion.W, C=cfg.fusion.C, L=cfg.fusion.L)
    decode = DecodeParams(seed=cfg.run.seed)
    for kind, item in fusion_mod.fuse_corpus(
        questions, chunks, fcfg, backend, decode, skip_ids=progress.completed_ids()
    ):
        if kind == "trace":
            progress.record_ok(item.question_id, fusion_mod.trace_to_record(item))
        else:
            qid, reason = item
            progress.record_skip(qid, "error", reason)
    return {}, None


def _run_reason(cfg, inputs, out_path, backend, progress: StageProgress):
    chunks = {c.chunk_id: c for c in map(chunk_from_record, read_jsonl(inputs["chunks"]))}
    questions = [question_from_record(r) for r in read_jsonl(inputs["questions"])]
    if cfg.reasoning.seeds_limit:
        questions = questions[: cfg.reasoning.seeds_limit]
    per_type = {
        t: (cfg.reasoning.quota or None) if t in cfg.reasoning.types else 0
        for t in REASONING_TYPES
    }
    for kind, item in generate_reasoning_set(
        questions,
        chunks,
        backend,
        per_type_quota=per_type,
        k=cfg.reasoning.k,
        k1=cfg.reasoning.k1,
        b=cfg.reasoning.b,
        sampling=cfg.reasoning.sampling,
        seed=cfg.run.seed,
        skip_ids=progress.completed_ids(),
    ):
        if kind == "qa":
            progress.record_ok(item.qa_id, qa_to_record(item))
        else:
            qa_id, reason = item
            progress.record_skip(qa_id, "error", reason)
    return {}, None


def _run_weight(cfg, inputs, out_path, backend, progress: StageProgress):
    questions = {q.question_id: q for q in map(question_from_record, read_jsonl(inputs["questions"]))}
    traces = read_jsonl(inputs["traces"])
    done = progress.completed_ids()
    tokenizer = backend.tokenizer
    for trace in traces:
        qid = trace["question_id"]
        if qid in done:
            continue
        q = questions.get(qid)
        if q is None:
            progress.record_skip(qid, "error", "question not found")
            continue
        answer_tokens = tokenizer.encode(trace["answer_text"])
        if not answer_tokens:
            progress.record_skip(qid, "filtered", "empty_answer")
            continue
        ctx = fusion_mod.internal_context(q.question)
        example = annotate_example(
            qid, ctx, answer_tokens, backend, accept_truncated=cfg.selective.accept_truncated
        )
        progress.record_ok(qid, example_to_record(example))
    return {}, None


_RUNNERS = {
    "chunk": _run_chunk,
    "metaqa": _run_metaqa,
    "fuse": _run_fuse,
    "reason": _run_reason,
    "weight": _run_weight,
}


# --- orchestration ---------------------------------------------------------

def _input_paths(stage: str, run_dir: Path, corpus_path: Path) -> dict[str, Path]:
    paths = {}
    for name, producer in INPUTS[stage].items():
        paths[name] = corpus_path if producer is None else run_dir / OUTPUT_FILES[producer]
    return paths


def _rel(path: Path, run_dir: Path) -> str:
    """Manifest paths are run_dir-relative so identical runs byte-match anywhere."""
    try:
        return str(path.resolve().relative_to(run_dir.resolve()))
    except ValueError:
        return str(path)


def run_id_for(cfg: PipelineConfig, corpus_digest: str) -> str:
    from dataclasses import asdict

    return hash_params({"config": asdict(cfg), "corpus": corpus_digest})[:12]


def run_stage(
    stage: str,
    cfg: PipelineConfig,
    run_dir: str | Path,
    corpus_path: str | Path,
    backend=None,
    force: bool = False,
) -> StageResult:
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    corpus_path = Path(corpus_path)
    inputs = _input_paths(stage, run_dir, corpus_path)
    for name, path in inputs.items():
        if not path.exists():
            raise StaleInput(f"{stage}: missing input {name} at {path}")
    input_digests = {
        name: {"path": _rel(path, run_dir), "sha256": sha256_file(path)}
        for name, path in inputs.items()
    }
    _, rules_digest = _clean_rules(cfg)
    config_hash = hash_params(stage_params(cfg, stage, rules_digest))

    existing = load_manifest(run_dir, stage)
    out_path = run_dir / OUTPUT_FILES[stage]
    if (
        not force
        and existing is not None
        and existing.get("config_hash") == config_hash
        and existing.get("inputs") == input_digests
        and out_path.exists()
    ):
        log.info("stage %s up to date, skipping", stage)
        return StageResult(stage, "skipped", existing)

    if backend is None and stage != "chunk":
        backend = _build_backend(cfg, run_dir)

    progress = StageProgress(out_path)
    try:
        _, summary = _RUNNERS[stage](cfg, inputs, out_path, backend, progress)
    except BaseException:
        progress.abort()
        raise
    digest, dispositions = progress.finalize()

    outputs = {"out": {"path": _rel(out_path, run_dir), "sha256": digest}}
    summary = summary or {}
    if stage == "fuse":
        fractions = [r["internal_fraction"] for r in read_jsonl(out_path)]
        summary = {"traces": len(fractions)}
        if fractions:
            summary["internal_fraction_mean"] = sum(fractions) / len(fractions)
    if stage == "weight":
        outputs.update(_write_weight_manifest(cfg, run_dir, out_path, digest, backend, config_hash))

    corpus_digest = sha256_file(corpus_path) if corpus_path.exists() else "external"
    manifest = build_manifest(
        stage=stage,
        run_id=run_id_for(cfg, corpus_digest),
        config_hash=config_hash,
        inputs=input_digests,
        outputs=outputs,
        dispositions=dispositions,
        seed=cfg.run.seed,
        backend=backend.descriptor.to_dict() if backend is not None else None,
        summary=summary or None,
    )
    atomic_write_json(manifest_path(run_dir, stage), manifest)
    return StageResult(stage, "computed", manifest)


def _write_weight_manifest(cfg, run_dir: Path, out_path: Path, data_digest: str,
                           backend, config_hash: str) -> dict:
    extra = {}
    model_artifact = None
    if isinstance(backend, BigramBackend):
        model_path = run_dir / "ngram_model.json"
        backend.save(model_path)
        model_artifact = {"path": _rel(model_path, run_dir), "sha256": sha256_file(model_path)}
        extra["model"] = model_artifact
    records = read_jsonl(out_path)
    entropy_mode = "truncated" if cfg.selective.accept_truncated and cfg.run.backend == "remote" else "full"
    export_manifest = {
        "v": 1,
        "examples": len(records),
        "tokens": sum(len(r["answer"]) for r in records),
        "tokenizer_id": backend.tokenizer.tokenizer_id,
        "entropy": entropy_mode,
        "backend": backend.descriptor.to_dict(),
        "config_hash": config_hash,
        "data_sha256": data_digest,
    }
    if model_artifact is not None:
        export_manifest["model_artifact"] = model_artifact
    atomic_write_json(out_path.with_name(out_path.name + ".manifest.json"), export_manifest)
    return extra


def run_all(
    cfg: PipelineConfig,
    run_dir: str | Path,
    corpus_path: str | Path,
    backend=None,
    with_report: bool = True,
) -> list[StageResult]:
    results = []
    for stage in STAGE_ORDER:
        results.append(run_stage(stage, cfg, run_dir, corpus_path, backend=backend))
    if with_report:
        from .report import write_run_report

        write_run_report(Path(run_dir))
    return results
