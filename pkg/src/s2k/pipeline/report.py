"""Report rendering: delimited summaries plus matplotlib figures next to them.

Figures are written through the Agg backend with PNG metadata suppressed so
that identical runs produce identical bytes.
"""
from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from ..evalmetrics import EvalReport  # noqa: E402
from ..sweep import SweepPoint  # noqa: E402
from .manifest import atomic_write_json, read_jsonl  # noqa: E402

_SAVEFIG = {"dpi": 120, "metadata": {"Software": None}}


def _save(fig, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, **_SAVEFIG)
    plt.close(fig)


def write_metrics_report(report: EvalReport, report_path: str | Path,
                         figures_dir: str | Path | None = None) -> None:
    report_path = Path(report_path)
    atomic_write_json(report_path, report.to_dict())
    figures_dir = Path(figures_dir) if figures_dir else report_path.parent
    csv_path = figures_dir / (report_path.stem + ".csv")
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value"])
        for name, value in report.to_dict().items():
            writer.writerow([name, value])

    fig, ax = plt.subplots(figsize=(4.5, 3))
    names = ["avg", "cons", "pass"]
    values = [report.avg_at_k, report.cons_at_k, report.pass_at_k]
    ax.bar(names, values, color=["#4878d0", "#ee854a", "#6acc64"])
    ax.set_ylim(0, 1)
    ax.set_ylabel("fraction")
    ax.set_title(f"@{report.k} over {report.n_questions} questions")
    fig.tight_layout()
    _save(fig, figures_dir / (report_path.stem + ".png"))


def write_sweep_report(points: list[SweepPoint], out_csv: str | Path,
                       figures_dir: str | Path | None = None) -> None:
    out_csv = Path(out_csv)
    out_csv.parent.mkdir(parents=True, exist_ok=True)
    with open(out_csv, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["C", "internal_fraction_mean", "questions"])
        for p in points:
            writer.writerow([p.C, p.internal_fraction_mean, p.questions])

    figures_dir = Path(figures_dir) if figures_dir else out_csv.parent
    fig, ax = plt.subplots(figsize=(4.5, 3))
    ax.plot([p.C for p in points], [p.internal_fraction_mean for p in points],
            marker="o", color="#4878d0")
    ax.set_xlabel("margin C (nats)")
    ax.set_ylabel("mean internal fraction")
    ax.set_title("internal-token share vs. margin")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save(fig, figures_dir / (out_csv.stem + ".png"))


def write_run_report(run_dir: Path) -> None:
    """Aggregate figures and a delimited summary for a completed run directory."""
    run_dir = Path(run_dir)
    figures = run_dir / "report"
    figures.mkdir(parents=True, exist_ok=True)

    chunks = read_jsonl(run_dir / "chunks.jsonl") if (run_dir / "chunks.jsonl").exists() else []
    traces = read_jsonl(run_dir / "traces.jsonl") if (run_dir / "traces.jsonl").exists() else []
    weighted = read_jsonl(run_dir / "weighted.jsonl") if (run_dir / "weighted.jsonl").exists() else []
    reasoning = read_jsonl(run_dir / "reasoning.jsonl") if (run_dir / "reasoning.jsonl").exists() else []
    questions = read_jsonl(run_dir / "questions.jsonl") if (run_dir / "questions.jsonl").exists() else []

    summary = {
        "chunks": len(chunks),
        "questions": len(questions),
        "traces": len(traces),
        "reasoning_items": len(reasoning),
        "weighted_examples": len(weighted),
    }
    if traces:
        fractions = [t["internal_fraction"] for t in traces]
        summary["internal_fraction_mean"] = sum(fractions) / len(fractions)
    if weighted:
        weights = [w for rec in weighted for w in rec["weights"]]
        if weights:
            summary["mean_token_weight"] = sum(weights) / len(weights)
    atomic_write_json(run_dir / "report" / "summary.json", summary)

    with open(figures / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["key", "value"])
        for key, value in sorted(summary.items()):
            writer.writerow([key, value])

    if chunks:
        fig, ax = plt.subplots(figsize=(4.5, 3))
        ax.hist([c["token_count"] for c in chunks], bins=12, color="#4878d0", edgecolor="white")
        ax.set_xlabel("chunk token count")
        ax.set_ylabel("chunks")
        ax.set_title("token balance across chunks")
        fig.tight_layout()
        _save(fig, figures / "chunk_tokens.png")

    if traces:
        fig, ax = plt.subplots(figsize=(4.5, 3))
        ax.hist([t["internal_fraction"] for t in traces], bins=10, range=(0, 1),
                color="#ee854a", edgecolor="white")
        ax.set_xlabel("internal fraction per answer")
        ax.set_ylabel("answers")
        ax.set_title("knowledge source mix")
        fig.tight_layout()
        _save(fig, figures / "internal_fraction.png")
