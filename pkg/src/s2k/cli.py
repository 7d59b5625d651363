"""s2k command line: chunk | metaqa | fuse | reason | weight | score-reward | eval | sweep | run-all."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .corpus import chunk_from_record
from .errors import S2KError
from .evalmetrics import evaluate, set_from_record
from .metaqa import question_from_record
from .pipeline.config import PipelineConfig, validate_config
from .pipeline.manifest import read_jsonl, write_jsonl
from .pipeline.stages import run_all, run_stage
from .rewards import score_record

log = logging.getLogger("s2k")


def _load_config(args) -> PipelineConfig:
    cfg = validate_config(getattr(args, "config", None))
    overrides: dict[str, dict] = {}

    def override(section: str, key: str, value) -> None:
        if value is not None:
            overrides.setdefault(section, {})[key] = value

    override("run", "seed", getattr(args, "seed", None))
    override("run", "backend", getattr(args, "backend", None))
    override("corpus", "budget", getattr(args, "budget", None))
    override("corpus", "clean_rules", getattr(args, "clean_rules", None))
    override("fusion", "W", getattr(args, "W", None))
    override("fusion", "C", getattr(args, "C", None))
    override("fusion", "L", getattr(args, "L", None))
    override("reasoning", "k", getattr(args, "k", None) if args.command == "reason" else None)
    override("reasoning", "sampling", getattr(args, "sampling", None))
    override("reasoning", "quota", getattr(args, "quota", None))
    types = getattr(args, "types", None)
    if types:
        alias = {"case": "case_based"}
        names = [alias.get(t.strip(), t.strip()) for t in types.split(",") if t.strip()]
        override("reasoning", "types", names)
    override("remote", "max_inflight", getattr(args, "max_inflight", None))
    override("remote", "retry_max", getattr(args, "retry_max", None))
    override("remote", "timeout_ms", getattr(args, "timeout_ms", None))
    if not overrides:
        return cfg

    merged = dataclasses.asdict(cfg)
    for section, kv in overrides.items():
        merged[section].update(kv)
    from .pipeline.config import config_from_dict

    return config_from_dict(merged)


def _single_stage(stage: str, args, *, corpus: str | None = None) -> None:
    """Run one stage in a scratch layout rooted at the output file's directory."""
    cfg = _load_config(args)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    run_dir = out.parent
    from .pipeline.stages import OUTPUT_FILES, INPUTS

    # map the user-provided input files into the layout the stage expects
    expected = {
        "chunk": {},
        "metaqa": {"chunks": getattr(args, "chunks", None)},
        "fuse": {"chunks": getattr(args, "chunks", None), "questions": getattr(args, "questions", None)},
        "reason": {"chunks": getattr(args, "chunks", None), "questions": getattr(args, "questions", None)},
        "weight": {"chunks": getattr(args, "chunks", None),
                   "questions": getattr(args, "questions", None),
                   "traces": getattr(args, "fused", None)},
    }[stage]
    for name, src in expected.items():
        if src is None:
            raise S2KError(f"stage {stage} requires --{name if name != 'traces' else 'fused'}")
        producer = INPUTS[stage][name]
        dest = run_dir / OUTPUT_FILES[producer]
        if Path(src).resolve() != dest.resolve():
            dest.write_bytes(Path(src).read_bytes())

    result = run_stage(stage, cfg, run_dir, corpus or (run_dir / "corpus.jsonl"), force=True)
    produced = run_dir / OUTPUT_FILES[stage]
    if produced.resolve() != out.resolve():
        out.write_bytes(produced.read_bytes())
    items = result.manifest["items"]
    print(f"{stage}: {items.get('ok', 0)} items -> {out} "
          f"({items.get('filtered', 0)} filtered, {items.get('error', 0)} failed)")


def cmd_chunk(args) -> None:
    _single_stage("chunk", args, corpus=args.infile)


def cmd_metaqa(args) -> None:
    _single_stage("metaqa", args)


def cmd_fuse(args) -> None:
    _single_stage("fuse", args)


def cmd_reason(args) -> None:
    if args.pairs:
        # split a prejoined pairs file into the questions/chunks layout
        pairs = read_jsonl(args.pairs)
        run_dir = Path(args.out).parent
        run_dir.mkdir(parents=True, exist_ok=True)
        chunks = [
            {"v": 1, "chunk_id": p["chunk_id"], "doc_id": p.get("doc_id", p["chunk_id"]),
             "text": p["chunk_text"], "token_count": max(1, len(p["chunk_text"].split())),
             "sentence_span": [0, 0], "oversize": False}
            for p in pairs
        ]
        questions = [
            {"v": 1, "question_id": p["question_id"], "chunk_id": p["chunk_id"],
             "question": p["question"], "generator_model": p.get("generator_model", "")}
            for p in pairs
        ]
        write_jsonl(run_dir / "chunks.jsonl", chunks)
        write_jsonl(run_dir / "questions.jsonl", questions)
        args.chunks = str(run_dir / "chunks.jsonl")
        args.questions = str(run_dir / "questions.jsonl")
    _single_stage("reason", args)


def cmd_weight(args) -> None:
    _single_stage("weight", args)


def cmd_score_reward(args) -> None:
    records = read_jsonl(args.infile)
    write_jsonl(args.out, [score_record(r) for r in records])
    print(f"score-reward: {len(records)} transcripts -> {args.out}")


def cmd_eval(args) -> None:
    sets = [set_from_record(r) for r in read_jsonl(args.infile)]
    for s in sets:
        if len(s.answers) != args.k:
            raise S2KError(f"{s.question_id}: expected k={args.k} answers, got {len(s.answers)}")
    report = evaluate(sets)
    from .pipeline.report import write_metrics_report

    write_metrics_report(report, args.report, args.figures)
    print(json.dumps(report.to_dict(), sort_keys=True))


def cmd_sweep(args) -> None:
    from .pipeline.report import write_sweep_report
    from .sweep import sweep_margin

    chunks = {c.chunk_id: c for c in map(chunk_from_record, read_jsonl(args.chunks))}
    questions = [question_from_record(r) for r in read_jsonl(args.questions)]
    c_values = [float(v) for v in args.C.split(",")]
    points = sweep_margin(questions, chunks, c_values, w=args.W, max_positions=args.max_positions)
    write_sweep_report(points, args.out, args.figures)
    for p in points:
        print(f"C={p.C:g}: internal_fraction={p.internal_fraction_mean:.4f} over {p.questions} questions")


def cmd_run_all(args) -> None:
    cfg = _load_config(args)
    corpus = args.corpus
    if corpus is None:
        from importlib import resources

        corpus = str(resources.files("s2k.data").joinpath("corpus.jsonl"))
    results = run_all(cfg, args.run_dir, corpus)
    for r in results:
        items = r.manifest["items"]
        print(f"{r.stage}: {r.status} ({items.get('ok', 0)} ok, "
              f"{items.get('filtered', 0)} filtered, {items.get('error', 0)} failed)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="s2k", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, backend=True):
        p.add_argument("--config", default=None, help="TOML config file")
        p.add_argument("--seed", type=int, default=None)
        if backend:
            p.add_argument("--backend", default=None, choices=["mock", "ngram", "remote"])
            p.add_argument("--max-inflight", dest="max_inflight", type=int, default=None)
            p.add_argument("--retry-max", dest="retry_max", type=int, default=None)
            p.add_argument("--timeout-ms", dest="timeout_ms", type=int, default=None)

    p = sub.add_parser("chunk", help="clean and segment a corpus into token-balanced chunks")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--clean-rules", dest="clean_rules", default=None)
    common(p, backend=False)
    p.set_defaults(func=cmd_chunk)

    p = sub.add_parser("metaqa", help="generate one knowledge question per chunk")
    p.add_argument("--chunks", required=True)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_metaqa)

    p = sub.add_parser("fuse", help="internal/external window-fused answers")
    p.add_argument("--questions", required=True)
    p.add_argument("--chunks", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--W", type=int, default=None)
    p.add_argument("--C", type=float, default=None)
    p.add_argument("--L", type=int, default=None)
    common(p)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("reason", help="multi-step reasoning QA from related pairs")
    p.add_argument("--pairs", default=None, help="prejoined question-chunk pairs JSONL")
    p.add_argument("--questions", default=None)
    p.add_argument("--chunks", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--types", default=None, help="comma-separated reasoning types")
    p.add_argument("--sampling", choices=["relevance", "random"], default=None)
    p.add_argument("--quota", type=int, default=None)
    common(p)
    p.set_defaults(func=cmd_reason)

    p = sub.add_parser("weight", help="per-token selective-SFT weights for fused answers")
    p.add_argument("--fused", required=True, help="fusion traces JSONL")
    p.add_argument("--questions", required=True)
    p.add_argument("--chunks", required=True)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_weight)

    p = sub.add_parser("score-reward", help="accuracy+format rewards for transcripts")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score_reward)

    p = sub.add_parser("eval", help="Avg@k / Cons@k / Pass@k over generations")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--report", required=True)
    p.add_argument("--figures", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="internal-fraction trend across margin values")
    p.add_argument("--questions", required=True)
    p.add_argument("--chunks", required=True)
    p.add_argument("--C", default="0,0.02,0.04,0.07,0.1")
    p.add_argument("--W", type=int, default=10)
    p.add_argument("--max-positions", dest="max_positions", type=int, default=64)
    p.add_argument("--out", required=True)
    p.add_argument("--figures", default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("run-all", help="run every stage over a corpus with manifests")
    p.add_argument("--corpus", default=None, help="defaults to the bundled synthetic corpus")
    p.add_argument("--run-dir", dest="run_dir", required=True)
    common(p)
    p.set_defaults(func=cmd_run_all)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except S2KError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
