"""Multi-step reasoning QA synthesis seeded by related question-chunk pairs.

For each seed question we pull the most related pairs (BM25 over question+chunk
text, the seed's own pair excluded), fill the per-type prompt template with a
numbered "question (Text: chunk)" block, and parse the generated QA. Deductive
and inductive items are four-option MCQ; case-based items are long form.
"""
from __future__ import annotations

import logging
import random
import re
from dataclasses import dataclass

from .bm25 import Bm25Index, build_bm25_index, retrieve_top_k
from .corpus import DocumentChunk
from .errors import MalformedGeneration, UnknownReasoningType
from .inference import Backend, DecodeParams, PromptContext, ROLE_USER, context
from .metaqa import MetaQuestion, load_template, render_template

log = logging.getLogger("s2k.reasoning")

DEDUCTIVE = "deductive"
INDUCTIVE = "inductive"
CASE_BASED = "case_based"
REASONING_TYPES = (DEDUCTIVE, INDUCTIVE, CASE_BASED)

_TEMPLATE_FILES = {
    DEDUCTIVE: "deductive.txt",
    INDUCTIVE: "inductive.txt",
    CASE_BASED: "case_based.txt",
}

_OPTION_RE = re.compile(r"^\s*([A-D])[.．]\s*(.*\S)\s*$")
_GOLD_RE = re.compile(r"^\s*Correct Answer\s*[:：]\s*(.+?)\s*$", re.IGNORECASE)
_FENCE_RE = re.compile(r"^\s*```[a-zA-Z]*\s*$")


@dataclass(frozen=True)
class QuestionChunkPair:
    question_id: str
    chunk_id: str
    question: str
    chunk_text: str

    @property
    def indexed_text(self) -> str:
        return f"{self.question} {self.chunk_text}"


@dataclass(frozen=True)
class ReasoningQA:
    qa_id: str
    reasoning_type: str
    source_pair_ids: tuple[str, ...]
    question: str
    options: dict[str, str] | None
    gold: str

    def __post_init__(self):
        if self.reasoning_type in (DEDUCTIVE, INDUCTIVE):
            if self.options is None or sorted(self.options) != ["A", "B", "C", "D"]:
                raise ValueError("MCQ items need exactly options A-D")
            if self.gold not in "ABCD":
                raise ValueError(f"MCQ gold must be a letter, got {self.gold!r}")
        elif self.reasoning_type == CASE_BASED:
            if self.options is not None:
                raise ValueError("case-based items are long form, no options")
            if not self.gold.strip():
                raise ValueError("case-based gold must be non-empty")
        else:
            raise UnknownReasoningType(self.reasoning_type)


def make_pairs(
    questions: list[MetaQuestion], chunks_by_id: dict[str, DocumentChunk]
) -> list[QuestionChunkPair]:
    pairs = []
    for q in questions:
        chunk = chunks_by_id.get(q.chunk_id)
        if chunk is None:
            raise ValueError(f"question {q.question_id} references unknown chunk {q.chunk_id}")
        pairs.append(
            QuestionChunkPair(
                question_id=q.question_id,
                chunk_id=q.chunk_id,
                question=q.question,
                chunk_text=chunk.text,
            )
        )
    return pairs


def index_pairs(pairs: list[QuestionChunkPair], k1: float = 1.2, b: float = 0.75,
                stopwords: frozenset[str] = frozenset()) -> Bm25Index:
    return build_bm25_index(
        [(p.question_id, p.indexed_text) for p in pairs], k1=k1, b=b, stopwords=stopwords
    )


def build_reasoning_prompt(rtype: str, sampled_pairs: list[QuestionChunkPair]) -> PromptContext:
    if rtype not in _TEMPLATE_FILES:
        raise UnknownReasoningType(rtype)
    if not 1 <= len(sampled_pairs) <= 10:
        raise ValueError(f"need 1..10 sampled pairs, got {len(sampled_pairs)}")
    block = "\n".join(
        f"{i}. {p.question} (Text: {p.chunk_text})" for i, p in enumerate(sampled_pairs, start=1)
    )
    template = load_template(_TEMPLATE_FILES[rtype])
    return context((ROLE_USER, render_template(template, meta_knowledge_from_sampling=block)))


def parse_reasoning_response(rtype: str, raw: str, qa_id: str = "",
                             source_pair_ids: tuple[str, ...] = ()) -> ReasoningQA:
    """Extract stem, options (MCQ) and the gold answer from the final Correct Answer line."""
    if rtype not in _TEMPLATE_FILES:
        raise UnknownReasoningType(rtype)
    lines = [ln for ln in raw.splitlines() if not _FENCE_RE.match(ln)]

    gold_idx = None
    gold_text = ""
    for i, line in enumerate(lines):
        m = _GOLD_RE.match(line)
        if m:
            gold_idx, gold_text = i, m.group(1).strip()
    if gold_idx is None:
        raise MalformedGeneration("no 'Correct Answer:' line")
    body = lines[:gold_idx]

    if rtype == CASE_BASED:
        stem = "\n".join(body).strip()
        if not stem:
            raise MalformedGeneration("empty question stem")
        return ReasoningQA(
            qa_id=qa_id,
            reasoning_type=rtype,
            source_pair_ids=source_pair_ids,
            question=stem,
            options=None,
            gold=gold_text,
        )

    options: dict[str, str] = {}
    first_option_idx = None
    current_letter = None
    for i, line in enumerate(body):
        m = _OPTION_RE.match(line)
        if m:
            current_letter = m.group(1)
            options[current_letter] = m.group(2)
            if first_option_idx is None:
                first_option_idx = i
        elif current_letter and line.strip():
            options[current_letter] += " " + line.strip()
    if sorted(options) != ["A", "B", "C", "D"]:
        raise MalformedGeneration(f"expected options A-D, found {sorted(options)}")
    letter = gold_text[:1].upper()
    if letter not in "ABCD":
        raise MalformedGeneration(f"gold is not an option letter: {gold_text!r}")
    stem = "\n".join(body[:first_option_idx]).strip()
    if not stem:
        raise MalformedGeneration("empty question stem")
    return ReasoningQA(
        qa_id=qa_id,
        reasoning_type=rtype,
        source_pair_ids=source_pair_ids,
        question=stem,
        options=options,
        gold=letter,
    )


def sample_related(
    index: Bm25Index,
    pairs_by_id: dict[str, QuestionChunkPair],
    seed_pair: QuestionChunkPair,
    k: int,
    sampling: str = "relevance",
    rng: random.Random | None = None,
) -> list[QuestionChunkPair]:
    others = [pid for pid in index.pair_ids if pid != seed_pair.question_id]
    if sampling == "relevance":
        ranked = retrieve_top_k(index, seed_pair.question, k, exclude={seed_pair.question_id})
        chosen = [pid for pid, _ in ranked]
    elif sampling == "random":
        rng = rng or random.Random(0)
        chosen = sorted(others) if len(others) <= k else rng.sample(sorted(others), k)
    else:
        raise ValueError(f"unknown sampling mode: {sampling}")
    return [pairs_by_id[pid] for pid in chosen]


def generate_reasoning_set(
    questions: list[MetaQuestion],
    chunks_by_id: dict[str, DocumentChunk],
    backend: Backend,
    per_type_quota: dict[str, int] | None = None,
    k: int = 10,
    k1: float = 1.2,
    b: float = 0.75,
    sampling: str = "relevance",
    seed: int = 0,
    decode: DecodeParams = DecodeParams(max_tokens=512),
    max_retries: int = 2,
    skip_ids: set[str] | None = None,
):
    """Yield ("qa", ReasoningQA) / ("error", (qa_id, message)) in deterministic order.

    Quotas cap items per reasoning type; None or a missing entry means
    unlimited. Seeds with fewer than k retrievable pairs use what exists.
    """
    pairs = make_pairs(questions, chunks_by_id)
    if not pairs:
        return
    index = index_pairs(pairs, k1=k1, b=b)
    pairs_by_id = {p.question_id: p for p in pairs}
    skip_ids = skip_ids or set()
    produced = {rt: 0 for rt in REASONING_TYPES}
    rng = random.Random(seed)

    for seed_pair in pairs:
        for rtype in REASONING_TYPES:
            quota = (per_type_quota or {}).get(rtype)
            if quota is not None and produced[rtype] >= quota:
                continue
            qa_id = f"{seed_pair.question_id}#{rtype}"
            if qa_id in skip_ids:
                produced[rtype] += 1
                continue
            sampled = sample_related(index, pairs_by_id, seed_pair, k, sampling, rng)
            if not sampled:
                sampled = [seed_pair]  # single-pair corpus: the seed is all we have
            prompt = build_reasoning_prompt(rtype, sampled)
            source_ids = tuple(p.question_id for p in sampled)
            err: MalformedGeneration | None = None
            for attempt in range(max_retries + 1):
                raw = backend.generate_text(prompt, decode)
                try:
                    qa = parse_reasoning_response(rtype, raw, qa_id=qa_id, source_pair_ids=source_ids)
                except MalformedGeneration as exc:
                    err = exc
                    log.warning("malformed %s generation for %s (attempt %d)", rtype, qa_id, attempt + 1)
                    continue
                produced[rtype] += 1
                yield "qa", qa
                err = None
                break
            if err is not None:
                yield "error", (qa_id, str(err))


def qa_to_record(qa: ReasoningQA) -> dict:
    rec = {
        "v": 1,
        "qa_id": qa.qa_id,
        "reasoning_type": qa.reasoning_type,
        "question": qa.question,
        "gold": qa.gold,
        "source_pair_ids": list(qa.source_pair_ids),
    }
    if qa.options is not None:
        rec["options"] = qa.options
    return rec


def qa_from_record(rec: dict) -> ReasoningQA:
    return ReasoningQA(
        qa_id=rec["qa_id"],
        reasoning_type=rec["reasoning_type"],
        source_pair_ids=tuple(rec.get("source_pair_ids", ())),
        question=rec["question"],
        options=rec.get("options"),
        gold=rec["gold"],
    )
