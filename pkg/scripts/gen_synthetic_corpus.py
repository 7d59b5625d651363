#!/usr/bin/env python3
"""Regenerate the bundled synthetic corpus (src/s2k/data/corpus.jsonl).

Fully seeded: same seed, same bytes. The corpus is desk-scale fake
pharmacology prose with injected boilerplate (timestamps, publisher tags,
navigation lines, control characters) so the cleaning rules have real work,
plus one all-boilerplate document that must be dropped entirely. Documents are
padded so that greedy sentence packing at the bundled budget yields exactly
TARGET_CHUNKS chunks with small per-document remainders.
"""
from __future__ import annotations

import json
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from s2k.corpus import CleaningConfig, RawDocument, clean_document, segment_corpus  # noqa: E402
from s2k.tokenizers import WordTokenizer  # noqa: E402

SEED = 20240907
BUDGET = 120  # bundled run config budget
TARGET_CHUNKS = 50

DRUGS = ["velsartan", "opreximab", "cantrelol", "dexufen", "norvatide", "quillacin",
         "sobrafil", "tremodine", "ulvexor", "zepricone"]
ENZYMES = ["hepatokinase", "myralase", "cortazyme", "fendrase", "lupeptidase", "vexokinase"]
MARKERS = ["seralin", "troponex", "feritol", "gladrin", "osteocalcin-B"]
CONDITIONS = ["velhart syndrome", "chronic myralgia", "renal drift", "atrial haze",
              "cortical fatigue"]
TISSUES = ["hepatic", "renal", "cardiac", "neural", "dermal", "synovial"]
OUTCOMES = ["remission rates", "clearance time", "relapse-free survival", "symptom scores"]
SUBSTRATES = ["arginate", "pyruvol", "lactanine", "glucoral", "citrene"]

TEMPLATES = [
    "{drug} inhibits {enzyme} in {tissue} tissue and lowers circulating {marker}.",
    "Elevated {marker} is an early indicator of {condition} in adult cohorts.",
    "{enzyme} catalyzes the conversion of {sub} to {sub2} during {tissue} metabolism.",
    "In a cohort of {n} patients, {drug} reduced {marker} levels by {pct} percent.",
    "Patients receiving {drug} showed better {outcome} than those receiving {drug2}.",
    "Co-administration of {drug} and {drug2} raises the risk of {condition}.",
    "Blockade of {enzyme} by {drug} delays the onset of {condition}.",
    "{marker} clearance depends on {enzyme} activity within {tissue} tissue.",
    "A daily dose of {n} milligrams of {drug} stabilizes {marker} within {n2} weeks.",
    "Loss of {enzyme} function is the hallmark lesion of {condition}.",
    "{drug} uptake peaks in {tissue} tissue roughly {n2} hours after dosing.",
    "Trials comparing {drug} with {drug2} reported comparable {outcome}.",
]

BOILERPLATE = [
    "2024-03-15 | Reuters",
    "2023-11-02 09:15 | Bloomberg",
    "Subscribe to our newsletter",
    "Share this article",
    "Advertisement",
    "Back to top",
]


def make_sentence(rng: random.Random) -> str:
    template = rng.choice(TEMPLATES)
    drug, drug2 = rng.sample(DRUGS, 2)
    sub, sub2 = rng.sample(SUBSTRATES, 2)
    return template.format(
        drug=drug, drug2=drug2, enzyme=rng.choice(ENZYMES), marker=rng.choice(MARKERS),
        condition=rng.choice(CONDITIONS), tissue=rng.choice(TISSUES),
        outcome=rng.choice(OUTCOMES), sub=sub, sub2=sub2,
        n=rng.randint(40, 900), n2=rng.randint(2, 48), pct=rng.randint(5, 60),
    )


def long_sentence(rng: random.Random) -> str:
    # one run-on sentence above the bundled budget exercises the oversize path
    clauses = [make_sentence(rng).rstrip(".") for _ in range(11)]
    return ", and furthermore ".join(clauses) + "."


def make_document(rng: random.Random, doc_id: str, n_sentences: int, with_long: bool) -> str:
    lines = []
    lines.append(rng.choice(BOILERPLATE[:2]))
    body = [make_sentence(rng) for _ in range(n_sentences)]
    if with_long:
        body.insert(n_sentences // 2, long_sentence(rng))
    for i, sentence in enumerate(body):
        if i and i % 9 == 0:
            lines.append(rng.choice(BOILERPLATE))
        if i and i % 13 == 0:
            sentence = sentence[: len(sentence) // 2] + "\x07" + sentence[len(sentence) // 2:]
        lines.append(sentence)
    lines.append(rng.choice(BOILERPLATE[2:]))
    return "\n".join(lines)


def chunk_count(text: str, tokenizer: WordTokenizer) -> int:
    doc = clean_document(RawDocument("tmp", text), CleaningConfig())
    return len(segment_corpus(doc, BUDGET, tokenizer))


def pad_to_full_chunks(rng: random.Random, text: str, tokenizer: WordTokenizer) -> str:
    """Append sentences until the document's final chunk is nearly full."""
    while True:
        doc = clean_document(RawDocument("tmp", text), CleaningConfig())
        chunks = segment_corpus(doc, BUDGET, tokenizer)
        if chunks[-1].token_count >= BUDGET - 12:
            return text
        text = text + "\n" + make_sentence(rng)


def main() -> None:
    rng = random.Random(SEED)
    tokenizer = WordTokenizer()
    docs = []
    sizes = [34, 30, 38, 28, 36, 32, 40, 30, 34, 36]
    for i, size in enumerate(sizes):
        doc_id = f"doc-{i:02d}"
        text = make_document(rng, doc_id, size, with_long=(i == 3))
        text = pad_to_full_chunks(rng, text, tokenizer)
        docs.append({"doc_id": doc_id, "text": text,
                     "source_meta": {"publisher": "synthetic", "series": f"s{i % 3}"}})

    total = sum(chunk_count(d["text"], tokenizer) for d in docs)
    while total > TARGET_CHUNKS:
        # drop whole trailing chunks' worth of sentences from the largest doc
        largest = max(docs, key=lambda d: chunk_count(d["text"], tokenizer))
        lines = largest["text"].split("\n")
        largest["text"] = "\n".join(lines[:-6])
        largest["text"] = pad_to_full_chunks(rng, largest["text"], tokenizer)
        total = sum(chunk_count(d["text"], tokenizer) for d in docs)
    while total < TARGET_CHUNKS:
        smallest = min(docs, key=lambda d: chunk_count(d["text"], tokenizer))
        extra = "\n".join(make_sentence(rng) for _ in range(10))
        smallest["text"] = pad_to_full_chunks(rng, smallest["text"] + "\n" + extra, tokenizer)
        total = sum(chunk_count(d["text"], tokenizer) for d in docs)

    # a document of pure boilerplate: cleaning must drop it completely
    docs.append({"doc_id": "doc-noise", "text": "\n".join(BOILERPLATE),
                 "source_meta": {"publisher": "synthetic"}})

    out = Path(__file__).resolve().parents[1] / "src" / "s2k" / "data" / "corpus.jsonl"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(doc, ensure_ascii=False, sort_keys=True) + "\n")
    print(f"wrote {len(docs)} documents, {total} content chunks at budget {BUDGET} -> {out}")


if __name__ == "__main__":
    main()
