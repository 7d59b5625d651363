"""Corpus preparation: boilerplate cleaning and token-balanced chunking.

Documents are cleaned by config-declared line/inline rules, split into
sentences with a deterministic splitter, then greedily packed into chunks
that stay under a token budget without ever splitting a sentence.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EmptyAfterCleaning
from .tokenizers import WordTokenizer

# Control characters other than \t and \n are always stripped.
_CTRL_RE = re.compile(r"[\x00-\x08\x0b\x0c\x0e-\x1f\x7f]")

DEFAULT_DROP_LINE_PATTERNS = [
    # timestamp lines, optionally followed by a publisher tag: "2024-01-02 | Reuters"
    r"^\s*\d{4}[-/]\d{2}[-/]\d{2}([ T]\d{2}:\d{2}(:\d{2})?)?\s*([|–—-]\s*\S.*)?$",
    # bare publisher header/footer lines
    r"^\s*(Reuters|Associated Press|AP|AFP|Bloomberg|Xinhua)\s*$",
    # navigation / subscription boilerplate
    r"^\s*(Subscribe to our newsletter|Share this article|Back to top|Advertisement|Home\s*[|>].*)\s*$",
]

_ABBREVIATIONS = (
    "Dr.", "Mr.", "Mrs.", "Ms.", "Prof.", "St.", "No.", "Fig.", "Figs.",
    "vs.", "e.g.", "i.e.", "etc.", "al.", "cf.", "approx.",
)

_SENTENCE_END_RE = re.compile(r"([.!?。？！])(\s+|$)")


@dataclass(frozen=True)
class RawDocument:
    doc_id: str
    text: str
    source_meta: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class DocumentChunk:
    chunk_id: str
    doc_id: str
    text: str
    token_count: int
    sentence_span: tuple[int, int]
    oversize: bool = False


@dataclass(frozen=True)
class CleaningConfig:
    drop_line_patterns: tuple[str, ...] = tuple(DEFAULT_DROP_LINE_PATTERNS)
    strip_patterns: tuple[str, ...] = ()

    @classmethod
    def from_dict(cls, data: dict) -> "CleaningConfig":
        return cls(
            drop_line_patterns=tuple(data.get("drop_line_patterns", DEFAULT_DROP_LINE_PATTERNS)),
            strip_patterns=tuple(data.get("strip_patterns", ())),
        )


def clean_document(doc: RawDocument, rules: CleaningConfig | None = None) -> RawDocument:
    """Strip boilerplate lines and inline junk; raises EmptyAfterCleaning if nothing survives.

    Idempotent: cleaning an already-clean document returns identical text.
    """
    if not doc.text:
        raise EmptyAfterCleaning(doc.doc_id)
    rules = rules or CleaningConfig()
    drop_res = [re.compile(p) for p in rules.drop_line_patterns]
    strip_res = [re.compile(p) for p in rules.strip_patterns]

    kept_lines = []
    for line in doc.text.split("\n"):
        line = _CTRL_RE.sub("", line)
        for sr in strip_res:
            line = sr.sub("", line)
        if any(dr.match(line) for dr in drop_res):
            continue
        kept_lines.append(line.rstrip())

    # Collapse runs of blank lines so repeated cleaning is a fixed point.
    cleaned_lines: list[str] = []
    for line in kept_lines:
        if line == "" and (not cleaned_lines or cleaned_lines[-1] == ""):
            continue
        cleaned_lines.append(line)
    while cleaned_lines and cleaned_lines[-1] == "":
        cleaned_lines.pop()

    cleaned = "\n".join(cleaned_lines).strip()
    if not cleaned:
        raise EmptyAfterCleaning(doc.doc_id)
    return RawDocument(doc_id=doc.doc_id, text=cleaned, source_meta=doc.source_meta)


def split_sentences(text: str, abbreviations: tuple[str, ...] = _ABBREVIATIONS) -> list[str]:
    """Split on sentence-final punctuation followed by whitespace, guarding abbreviations."""
    sentences = []
    start = 0
    for m in _SENTENCE_END_RE.finditer(text):
        end = m.end(1)
        candidate = text[start:end]
        tail = candidate.rstrip()
        if any(tail.endswith(abbr) for abbr in abbreviations):
            continue
        stripped = candidate.strip()
        if stripped:
            sentences.append(stripped)
        start = m.end()
    rest = text[start:].strip()
    if rest:
        sentences.append(rest)
    return sentences


def segment_corpus(
    doc: RawDocument,
    budget: int,
    tokenizer: WordTokenizer,
) -> list[DocumentChunk]:
    """Greedy sentence packing: append sentences while the chunk stays within budget.

    A sentence that would overflow starts a new chunk; a single sentence larger
    than the budget becomes its own chunk flagged oversize. Sentence boundaries
    are never split, so joining chunk texts reproduces the cleaned document up
    to inter-chunk whitespace.
    """
    if budget < 16:
        raise ValueError(f"chunk budget must be >= 16, got {budget}")
    sentences = split_sentences(doc.text)
    counts = [tokenizer.count(s) for s in sentences]

    chunks: list[DocumentChunk] = []
    cur: list[str] = []
    cur_tokens = 0
    cur_first = 0

    def flush(last_idx: int) -> None:
        nonlocal cur, cur_tokens, cur_first
        if not cur:
            return
        text = " ".join(cur)
        chunks.append(
            DocumentChunk(
                chunk_id=f"{doc.doc_id}#c{len(chunks):04d}",
                doc_id=doc.doc_id,
                text=text,
                token_count=cur_tokens,
                sentence_span=(cur_first, last_idx),
                oversize=cur_tokens > budget,
            )
        )
        cur = []
        cur_tokens = 0

    for i, (sent, n) in enumerate(zip(sentences, counts)):
        if cur and cur_tokens + n > budget:
            flush(i - 1)
            cur_first = i
        if not cur:
            cur_first = i
        cur.append(sent)
        cur_tokens += n
        if cur_tokens > budget:
            # single oversized sentence: cannot split, becomes its own chunk
            flush(i)
    flush(len(sentences) - 1)
    return chunks


def load_documents(path: str | Path) -> list[RawDocument]:
    """Read documents from JSONL ({doc_id, text, source_meta}) or a plain UTF-8 text file."""
    path = Path(path)
    raw = path.read_text(encoding="utf-8")
    docs: list[RawDocument] = []
    if path.suffix == ".jsonl":
        for i, line in enumerate(raw.splitlines()):
            if not line.strip():
                continue
            rec = json.loads(line)
            docs.append(
                RawDocument(
                    doc_id=str(rec["doc_id"]),
                    text=rec["text"],
                    source_meta=dict(rec.get("source_meta") or {}),
                )
            )
    else:
        docs.append(RawDocument(doc_id=path.stem, text=raw))
    seen: set[str] = set()
    for d in docs:
        if d.doc_id in seen:
            raise ValueError(f"duplicate doc_id: {d.doc_id}")
        seen.add(d.doc_id)
    return docs


def chunk_to_record(chunk: DocumentChunk) -> dict:
    return {
        "v": 1,
        "chunk_id": chunk.chunk_id,
        "doc_id": chunk.doc_id,
        "text": chunk.text,
        "token_count": chunk.token_count,
        "sentence_span": list(chunk.sentence_span),
        "oversize": chunk.oversize,
    }


def chunk_from_record(rec: dict) -> DocumentChunk:
    return DocumentChunk(
        chunk_id=rec["chunk_id"],
        doc_id=rec["doc_id"],
        text=rec["text"],
        token_count=rec["token_count"],
        sentence_span=tuple(rec["sentence_span"]),
        oversize=rec.get("oversize", False),
    )
