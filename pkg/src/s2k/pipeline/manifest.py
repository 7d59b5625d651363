"""Digests, atomic writes, run manifests and item-level resume bookkeeping.

Stage outputs are written to a .partial file line by line with a .progress
sidecar recording each item's disposition, then renamed into place on success.
A crash leaves both files behind; the next run trims any inconsistent tail and
skips every item whose disposition survived. Manifests carry no wall-clock
fields, so reruns are byte-identical.
"""
from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: str | Path) -> str:
    return sha256_bytes(Path(path).read_bytes())


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def hash_params(params: dict) -> str:
    return sha256_bytes(canonical_json(params).encode("utf-8"))


def atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def atomic_write_json(path: str | Path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, sort_keys=True, ensure_ascii=False, indent=2) + "\n")


def read_jsonl(path: str | Path) -> list[dict]:
    records = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            records.append(json.loads(line))
    return records


def jsonl_line(record: dict) -> str:
    return canonical_json(record) + "\n"


def write_jsonl(path: str | Path, records: list[dict]) -> str:
    payload = "".join(jsonl_line(r) for r in records)
    atomic_write_text(path, payload)
    return sha256_bytes(payload.encode("utf-8"))


def _valid_lines(path: Path) -> list[str]:
    if not path.exists():
        return []
    lines = []
    for line in path.read_text(encoding="utf-8").splitlines():
        try:
            json.loads(line)
        except json.JSONDecodeError:
            break  # corrupt tail from a crash; everything after is discarded
        lines.append(line)
    return lines


class StageProgress:
    """Append-only item log backing crash-safe, order-preserving resume."""

    def __init__(self, final_path: str | Path):
        self.final_path = Path(final_path)
        self.partial_path = self.final_path.with_name(self.final_path.name + ".partial")
        self.progress_path = self.final_path.with_name(self.final_path.name + ".progress")
        self._recover()
        self._partial = open(self.partial_path, "a", encoding="utf-8")
        self._progress = open(self.progress_path, "a", encoding="utf-8")

    def _recover(self) -> None:
        progress_lines = _valid_lines(self.progress_path)
        partial_lines = _valid_lines(self.partial_path)
        dispositions = [json.loads(line) for line in progress_lines]
        n_ok = sum(d.get("lines", 1) for d in dispositions if d["status"] == "ok")
        # output lines are written before their disposition, so trim any orphans
        partial_lines = partial_lines[:n_ok]
        self.partial_path.write_text("".join(l + "\n" for l in partial_lines), encoding="utf-8")
        self.progress_path.write_text("".join(l + "\n" for l in progress_lines), encoding="utf-8")
        self.dispositions: list[dict] = dispositions

    def completed_ids(self) -> set[str]:
        return {d["id"] for d in self.dispositions}

    def record_ok(self, item_id: str, record: dict) -> None:
        self.record_ok_many(item_id, [record])

    def record_ok_many(self, item_id: str, records: list[dict]) -> None:
        for record in records:
            self._partial.write(jsonl_line(record))
        self._partial.flush()
        self._write_disposition({"id": item_id, "status": "ok", "lines": len(records)})

    def record_skip(self, item_id: str, status: str, reason: str = "") -> None:
        self._write_disposition({"id": item_id, "status": status, "reason": reason})

    def _write_disposition(self, d: dict) -> None:
        self._progress.write(jsonl_line(d))
        self._progress.flush()
        self.dispositions.append(d)

    def finalize(self) -> tuple[str, list[dict]]:
        """Promote the partial file to the final output; returns (sha256, dispositions)."""
        self._partial.close()
        self._progress.close()
        digest = sha256_file(self.partial_path)
        os.replace(self.partial_path, self.final_path)
        dispositions = self.dispositions
        self.progress_path.unlink()
        return digest, dispositions

    def abort(self) -> None:
        self._partial.close()
        self._progress.close()


def build_manifest(
    stage: str,
    run_id: str,
    config_hash: str,
    inputs: dict[str, dict],
    outputs: dict[str, dict],
    dispositions: list[dict],
    seed: int,
    backend: dict | None,
    summary: dict | None = None,
) -> dict:
    counts: dict[str, int] = {}
    failures = []
    for d in dispositions:
        counts[d["status"]] = counts.get(d["status"], 0) + 1
        if d["status"] == "error":
            failures.append({"id": d["id"], "reason": d.get("reason", "")})
    manifest = {
        "v": 1,
        "stage": stage,
        "run_id": run_id,
        "config_hash": config_hash,
        "inputs": inputs,
        "outputs": outputs,
        "items": {"total": len(dispositions), **counts},
        "failures": failures,
        "seed": seed,
        "backend": backend,
    }
    if summary:
        manifest["summary"] = summary
    return manifest


def manifest_path(run_dir: str | Path, stage: str) -> Path:
    return Path(run_dir) / f"{stage}.manifest.json"


def load_manifest(run_dir: str | Path, stage: str) -> dict | None:
    path = manifest_path(run_dir, stage)
    if not path.exists():
        return None
    return json.loads(path.read_text(encoding="utf-8"))
