"""Okapi BM25 over question+chunk pairs, with the non-negative smoothed IDF.

idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5))
score(q, d) = sum over query token occurrences of
              idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl))
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

_TOKEN_RE = re.compile(r"\w+", re.UNICODE)


def bm25_tokenize(text: str, stopwords: frozenset[str] = frozenset()) -> list[str]:
    return [t for t in (m.group(0).lower() for m in _TOKEN_RE.finditer(text)) if t not in stopwords]


@dataclass
class Bm25Index:
    pair_ids: list[str]
    postings: dict[str, list[tuple[int, int]]]  # term -> [(pair index, term frequency)]
    doc_lengths: list[int]
    avgdl: float
    k1: float = 1.2
    b: float = 0.75
    stopwords: frozenset[str] = field(default_factory=frozenset)

    @property
    def n_docs(self) -> int:
        return len(self.pair_ids)

    def idf(self, term: str) -> float:
        df = len(self.postings.get(term, ()))
        return math.log(1.0 + (self.n_docs - df + 0.5) / (df + 0.5))


def build_bm25_index(
    pairs: list[tuple[str, str]],
    k1: float = 1.2,
    b: float = 0.75,
    stopwords: frozenset[str] = frozenset(),
) -> Bm25Index:
    """pairs: (pair_id, indexed text). Indexed text is question + chunk."""
    if not pairs:
        raise ValueError("cannot index zero pairs")
    pair_ids = [pid for pid, _ in pairs]
    if len(set(pair_ids)) != len(pair_ids):
        raise ValueError("pair ids must be unique")
    postings: dict[str, dict[int, int]] = {}
    doc_lengths: list[int] = []
    for i, (_, text) in enumerate(pairs):
        tokens = bm25_tokenize(text, stopwords)
        doc_lengths.append(len(tokens))
        for tok in tokens:
            postings.setdefault(tok, {})
            postings[tok][i] = postings[tok].get(i, 0) + 1
    flat = {term: sorted(docs.items()) for term, docs in postings.items()}
    avgdl = sum(doc_lengths) / len(doc_lengths)
    return Bm25Index(
        pair_ids=pair_ids,
        postings=flat,
        doc_lengths=doc_lengths,
        avgdl=avgdl,
        k1=k1,
        b=b,
        stopwords=stopwords,
    )


def retrieve_top_k(
    index: Bm25Index,
    query: str,
    k: int,
    exclude: frozenset[str] | set[str] = frozenset(),
) -> list[tuple[str, float]]:
    """Descending score, ties broken by ascending pair_id; excluded ids never returned.

    Pairs matching no query term rank with score 0, so k larger than the corpus
    returns every non-excluded pair.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    scores = [0.0] * index.n_docs
    for term in bm25_tokenize(query, index.stopwords):
        posting = index.postings.get(term)
        if not posting:
            continue
        idf = index.idf(term)
        for doc_idx, tf in posting:
            dl = index.doc_lengths[doc_idx]
            norm = tf + index.k1 * (1.0 - index.b + index.b * dl / index.avgdl)
            scores[doc_idx] += idf * tf * (index.k1 + 1.0) / norm
    ranked = sorted(
        (
            (pid, scores[i])
            for i, pid in enumerate(index.pair_ids)
            if pid not in exclude
        ),
        key=lambda item: (-item[1], item[0]),
    )
    return ranked[:k]
