"""Okapi BM25 tests; ranking must agree with a direct score-every-pair oracle."""
import math
import random

import pytest

from s2k.bm25 import bm25_tokenize, build_bm25_index, retrieve_top_k

WORD_POOL = [
    "enzyme", "serum", "dose", "renal", "cardiac", "marker", "trial", "onset",
    "uptake", "blocker", "lesion", "fibrosis", "antigen", "plasma", "chronic",
    "acute", "binding", "pathway", "receptor", "clearance", "titer", "assay",
]


def brute_force_scores(pairs, query, k1=1.2, b=0.75):
    """Straight transcription of the formula, one document at a time."""
    n = len(pairs)
    docs = [bm25_tokenize(text) for _, text in pairs]
    lengths = [len(d) for d in docs]
    avgdl = sum(lengths) / n
    q_tokens = bm25_tokenize(query)
    scores = {}
    for (pid, _), tokens, dl in zip(pairs, docs, lengths):
        s = 0.0
        for term in q_tokens:
            tf = tokens.count(term)
            if tf == 0:
                continue
            df = sum(1 for d in docs if term in d)
            idf = math.log(1 + (n - df + 0.5) / (df + 0.5))
            s += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl))
        scores[pid] = s
    return scores


def random_corpus(rng, n_pairs):
    pairs = []
    for i in range(n_pairs):
        text = " ".join(rng.choice(WORD_POOL) for _ in range(rng.randint(4, 40)))
        pairs.append((f"p{i:04d}", text))
    return pairs


class TestIndex:
    def test_disjoint_terms_score_zero(self):
        pairs = [("a", "alpha beta"), ("b", "gamma delta"), ("c", "epsilon zeta")]
        index = build_bm25_index(pairs)
        assert all(score == 0.0 for _, score in retrieve_top_k(index, "unrelated probe", 3))

    def test_single_document_idf_is_smoothed_nonnegative(self):
        index = build_bm25_index([("only", "enzyme serum enzyme")])
        # hand evaluation: N=1, df=1 -> ln(1 + 0.5/1.5)
        assert index.idf("enzyme") == pytest.approx(math.log(1 + 0.5 / 1.5))
        assert index.idf("enzyme") >= 0
        assert index.idf("absent") == pytest.approx(math.log(1 + 1.5 / 0.5))

    def test_rebuild_identical(self):
        rng = random.Random(0)
        pairs = random_corpus(rng, 30)
        a = build_bm25_index(pairs)
        b = build_bm25_index(pairs)
        assert a.postings == b.postings
        assert a.doc_lengths == b.doc_lengths
        assert a.avgdl == b.avgdl

    def test_avgdl_invariant(self):
        pairs = [("a", "one two three"), ("b", "four five")]
        index = build_bm25_index(pairs)
        assert index.avgdl == pytest.approx(sum(index.doc_lengths) / 2)

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            build_bm25_index([])


class TestRetrieve:
    def test_matches_brute_force_on_fifty_random_corpora(self):
        rng = random.Random(1234)
        for trial in range(50):
            n = rng.choice([3, 5, 10, 25, 60, 120, 300, 1000])
            pairs = random_corpus(rng, n)
            index = build_bm25_index(pairs)
            query = " ".join(rng.choice(WORD_POOL) for _ in range(rng.randint(2, 8)))
            expected = brute_force_scores(pairs, query)
            ranked = retrieve_top_k(index, query, 10)
            want = sorted(expected.items(), key=lambda kv: (-kv[1], kv[0]))[:10]
            assert [pid for pid, _ in ranked] == [pid for pid, _ in want], f"trial {trial}"
            for (pid, got), (_, exp) in zip(ranked, want):
                assert got == pytest.approx(exp, abs=1e-9), f"trial {trial} {pid}"

    def test_k_larger_than_corpus_returns_everything_ranked(self):
        pairs = [("a", "enzyme serum"), ("b", "enzyme enzyme serum"), ("c", "dose")]
        index = build_bm25_index(pairs)
        ranked = retrieve_top_k(index, "enzyme", 50)
        assert len(ranked) == 3
        assert ranked[0][0] == "b"
        assert ranked[-1][1] == 0.0

    def test_self_pair_exclusion(self):
        pairs = [("self", "enzyme serum dose"), ("other", "enzyme serum"), ("far", "lesion")]
        index = build_bm25_index(pairs)
        ranked = retrieve_top_k(index, "enzyme serum dose", 2, exclude={"self"})
        assert ranked[0][0] == "other"
        assert all(pid != "self" for pid, _ in ranked)

    def test_ties_break_by_ascending_pair_id(self):
        pairs = [("z", "enzyme"), ("a", "enzyme"), ("m", "enzyme")]
        index = build_bm25_index(pairs)
        ranked = retrieve_top_k(index, "enzyme", 3)
        assert [pid for pid, _ in ranked] == ["a", "m", "z"]

    def test_k_floor(self):
        index = build_bm25_index([("a", "x")])
        with pytest.raises(ValueError):
            retrieve_top_k(index, "x", 0)

    def test_stopwords_filtered(self):
        index = build_bm25_index([("a", "the enzyme"), ("b", "the dose")],
                                 stopwords=frozenset({"the"}))
        ranked = retrieve_top_k(index, "the", 2)
        assert all(score == 0.0 for _, score in ranked)
