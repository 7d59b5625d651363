"""One self-contained knowledge question per chunk, plus robust reply parsing.

The prompt template is a pinned fixture shipped with the package; substitution
is a single pass (braces inside the chunk text are never re-expanded). Replies
must carry a JSON object with a "question" field; an empty question means the
chunk held nothing worth asking and the item is filtered, not stored.
"""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from importlib import resources

from .corpus import DocumentChunk
from .errors import UnparseableResponse
from .inference import Backend, DecodeParams, PromptContext, context, ROLE_USER

log = logging.getLogger("s2k.metaqa")

BANNED_PHRASES = (
    "as described in the text",
    "according to the passage",
    "in the document",
    "from the chunk",
)

_FENCE_RE = re.compile(r"```[a-zA-Z]*\n?|```")


@dataclass(frozen=True)
class MetaQuestion:
    question_id: str
    chunk_id: str
    question: str
    generator_model: str


@dataclass(frozen=True)
class Filtered:
    chunk_id: str
    reason: str


def load_template(name: str) -> str:
    return resources.files("s2k.templates").joinpath(name).read_text(encoding="utf-8")


def render_template(template: str, **fields: str) -> str:
    """Single-pass substitution with {{ }} brace escapes, format-style.

    Substituted values are inserted verbatim; placeholders inside them are not
    expanded again.
    """
    out = []
    i = 0
    n = len(template)
    while i < n:
        ch = template[i]
        if ch == "{":
            if i + 1 < n and template[i + 1] == "{":
                out.append("{")
                i += 2
                continue
            end = template.index("}", i)
            name = template[i + 1:end]
            if name not in fields:
                raise KeyError(f"template placeholder {{{name}}} has no value")
            out.append(fields[name])
            i = end + 1
            continue
        if ch == "}":
            if i + 1 < n and template[i + 1] == "}":
                out.append("}")
                i += 2
                continue
            raise ValueError("unbalanced } in template")
        out.append(ch)
        i += 1
    return "".join(out)


def build_meta_prompt(chunk: DocumentChunk) -> PromptContext:
    if not chunk.text.strip():
        raise ValueError(f"chunk {chunk.chunk_id} is empty")
    template = load_template("meta_question.txt")
    prompt = render_template(template, article_text=chunk.text)
    return context((ROLE_USER, prompt))


def extract_first_json_object(raw: str) -> dict:
    """First balanced-brace object that parses, ignoring code fences and prose."""
    text = _FENCE_RE.sub("", raw)
    for start, ch in enumerate(text):
        if ch != "{":
            continue
        depth = 0
        in_string = False
        escaped = False
        for end in range(start, len(text)):
            c = text[end]
            if in_string:
                if escaped:
                    escaped = False
                elif c == "\\":
                    escaped = True
                elif c == '"':
                    in_string = False
                continue
            if c == '"':
                in_string = True
            elif c == "{":
                depth += 1
            elif c == "}":
                depth -= 1
                if depth == 0:
                    candidate = text[start:end + 1]
                    try:
                        obj = json.loads(candidate)
                    except json.JSONDecodeError:
                        break
                    if isinstance(obj, dict):
                        return obj
                    break
    raise UnparseableResponse(raw[:200])


def parse_question_response(
    raw: str, chunk_id: str = "", generator_model: str = ""
) -> MetaQuestion | Filtered:
    """Parse a reply into a MetaQuestion, or Filtered when the model declined.

    Raises UnparseableResponse when no structured object is recoverable; the
    caller routes those to the retry queue.
    """
    obj = extract_first_json_object(raw)
    if "question" not in obj or not isinstance(obj["question"], str):
        raise UnparseableResponse("object has no string 'question' field")
    question = obj["question"].strip()
    if not question:
        return Filtered(chunk_id=chunk_id, reason="empty_question")
    lowered = question.lower()
    for phrase in BANNED_PHRASES:
        if phrase in lowered:
            return Filtered(chunk_id=chunk_id, reason=f"banned_phrase:{phrase}")
    return MetaQuestion(
        question_id=f"{chunk_id}#q0" if chunk_id else "q0",
        chunk_id=chunk_id,
        question=question,
        generator_model=generator_model,
    )


def generate_meta_question(
    chunk: DocumentChunk,
    backend: Backend,
    decode: DecodeParams,
    max_retries: int = 2,
) -> MetaQuestion | Filtered:
    """Generate and parse, retrying unparseable replies with the identical prompt."""
    prompt = build_meta_prompt(chunk)
    model = backend.descriptor.model_name
    last: UnparseableResponse | None = None
    for attempt in range(max_retries + 1):
        raw = backend.generate_text(prompt, decode)
        try:
            return parse_question_response(raw, chunk_id=chunk.chunk_id, generator_model=model)
        except UnparseableResponse as exc:
            last = exc
            log.warning("unparseable reply for %s (attempt %d)", chunk.chunk_id, attempt + 1)
    log.warning("dropping %s after %d attempts: %s", chunk.chunk_id, max_retries + 1, last)
    return Filtered(chunk_id=chunk.chunk_id, reason="unparseable")


def question_to_record(q: MetaQuestion) -> dict:
    return {
        "v": 1,
        "question_id": q.question_id,
        "chunk_id": q.chunk_id,
        "question": q.question,
        "generator_model": q.generator_model,
    }


def question_from_record(rec: dict) -> MetaQuestion:
    return MetaQuestion(
        question_id=rec["question_id"],
        chunk_id=rec["chunk_id"],
        question=rec["question"],
        generator_model=rec.get("generator_model", ""),
    )
