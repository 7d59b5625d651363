"""Acceptance suite: one test per release criterion, one printed line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. Oracles are imported from the unit-test modules; they share no code
with the paths they check.
"""
import itertools
import math
import random
import time

import pytest

from test_bm25 import brute_force_scores, random_corpus
from test_evalmetrics import brute_avg, brute_cons, brute_pass, from_pattern
from test_fusion import build_scenario, ctx_key, mk_chunk, mk_question, oracle_fuse, scenario_backend

from s2k.bm25 import build_bm25_index, retrieve_top_k
from s2k.evalmetrics import GenerationSet, avg_at_k, cons_at_k, evaluate, pass_at_k
from s2k.fusion import FusionConfig, decode_single_context, external_context, fuse_answer, internal_context
from s2k.inference import TokenDistribution
from s2k.metaqa import MetaQuestion
from s2k.pipeline.manifest import read_jsonl
from s2k.pipeline.stages import STAGE_ORDER, run_all, run_stage
from s2k.rewards import total_reward
from s2k.selective import entropy, weight, weighted_loss
from s2k.sweep import sweep_margin


def report(name: str) -> None:
    print(f"[ACCEPTANCE] {name}: PASS")


class TestFusionAcceptance:
    def test_fusion_oracle_equivalence(self):
        """20 scripted mock scenarios match an independent re-derivation, under 1 s."""
        started = time.perf_counter()
        matches = 0
        for seed in range(20):
            sc = build_scenario(seed)
            cfg = FusionConfig(W=sc["W"], C=sc["C"], L=sc["L"])
            trace = fuse_answer(mk_question(sc["question"]), mk_chunk(sc["document"]),
                                cfg, scenario_backend(sc))
            answer, segments, _ = oracle_fuse(
                sc["tables_i"], sc["tables_e"], sc["base_i"], sc["base_e"],
                sc["W"], sc["C"], sc["L"])
            assert trace.answer_text == answer, f"scenario {seed}: answer mismatch"
            assert [(s.source, s.tokens) for s in trace.segments] == segments, \
                f"scenario {seed}: segment mismatch"
            matches += 1
        elapsed = time.perf_counter() - started
        assert matches == 20
        assert elapsed < 1.0, f"oracle suite took {elapsed:.2f}s"
        report(f"fusion oracle equivalence (20/20 scenarios, {elapsed * 1000:.0f} ms)")

    def test_fusion_limits(self):
        """C=+inf reproduces pure-external decode, C=-inf pure-internal, W=1 the per-token rule."""
        for seed in range(6):
            sc = build_scenario(seed)
            backend = scenario_backend(sc)
            q, d = mk_question(sc["question"]), mk_chunk(sc["document"])

            cfg = FusionConfig(W=sc["W"], C=math.inf, L=sc["L"])
            assert fuse_answer(q, d, cfg, backend).answer_text == decode_single_context(
                external_context(sc["question"], sc["document"]), cfg, backend)

            cfg = FusionConfig(W=sc["W"], C=-math.inf, L=sc["L"])
            assert fuse_answer(q, d, cfg, backend).answer_text == decode_single_context(
                internal_context(sc["question"]), cfg, backend)

        for seed in range(6):
            sc = build_scenario(seed, w_override=1)
            backend = scenario_backend(sc)
            cfg = FusionConfig(W=1, C=sc["C"], L=sc["L"])
            trace = fuse_answer(mk_question(sc["question"]), mk_chunk(sc["document"]),
                                cfg, backend)
            prefix = []
            from s2k.tokenizers import EOS

            while len(prefix) < sc["L"]:
                row_i = sc["tables_i"][ctx_key(sc["base_i"], prefix)]
                row_e = sc["tables_e"][ctx_key(sc["base_e"], prefix)]
                tok_i, p_i = max(row_i.items(), key=lambda kv: kv[1])
                tok_e, p_e = max(row_e.items(), key=lambda kv: kv[1])
                tok = tok_i if math.log(p_i) >= math.log(p_e) + sc["C"] else tok_e
                if tok == EOS:
                    break
                prefix.append(tok)
            assert trace.answer_text == " ".join(prefix)
        report("fusion limits (C=+inf external, C=-inf internal, W=1 per-token)")

    def test_fig3a_trend_qualitative(self, bundled_chunks):
        """Mean internal fraction is non-increasing in C and strictly falls somewhere."""
        chunks = {c.chunk_id: c for c in bundled_chunks}
        questions = [
            MetaQuestion(question_id=f"{c.chunk_id}#q0", chunk_id=c.chunk_id,
                         question="What do these findings describe?", generator_model="t")
            for c in bundled_chunks
        ]
        grid = [0.0, 0.02, 0.04, 0.07, 0.1]
        points = sweep_margin(questions, chunks, grid, w=10, max_positions=64)
        fractions = [p.internal_fraction_mean for p in points]
        assert all(a >= b for a, b in zip(fractions, fractions[1:])), fractions
        assert any(a > b for a, b in zip(fractions, fractions[1:])), fractions
        report("fig3a trend (internal fraction "
               + " -> ".join(f"{f:.3f}" for f in fractions) + " over C " + str(grid) + ")")


class TestSelectiveAcceptance:
    def test_selective_sft_arithmetic(self):
        """3-case fixture against hand-derived sums; property suite on 1000 random rows."""
        v4 = ("t0", "t1", "t2", "t3")

        assert math.log(4) == pytest.approx(1.386294, abs=1e-6)
        assert entropy(TokenDistribution(v4, (0.25,) * 4)) == pytest.approx(math.log(4), abs=1e-9)

        h = -sum(p * math.log(p) for p in (0.97, 0.01, 0.01, 0.01))
        assert entropy(TokenDistribution(v4, (0.97, 0.01, 0.01, 0.01))) == pytest.approx(h, abs=1e-12)
        omega = weight(1, h, 4)
        assert omega == pytest.approx(h / math.log(4), abs=1e-12)

        nll = [-math.log(0.97), -math.log(0.3)]
        loss = weighted_loss([omega, 1.0], nll)
        assert loss == pytest.approx((omega * nll[0] + nll[1]) / 2, abs=1e-12)
        # frozen oracle constants, tolerance 1e-5
        assert h == pytest.approx(0.1677005, abs=1e-5)
        assert omega == pytest.approx(0.1209704, abs=1e-5)
        assert loss == pytest.approx(0.6038287, abs=1e-5)

        rng = random.Random(1000)
        for _ in range(1000):
            v = rng.randint(2, 10)
            raw = [rng.random() + 1e-9 for _ in range(v)]
            total = sum(raw)
            probs = tuple(x / total for x in raw)
            dist = TokenDistribution(tuple(f"w{i}" for i in range(v)), probs)
            h_t = entropy(dist)
            target = rng.randrange(v)
            correct = 1 if target == dist.argmax_index() else 0
            om = weight(correct, min(h_t, math.log(v)), v)
            assert 0.0 <= om <= 1.0
            nll_t = -math.log(probs[target])
            assert om * nll_t <= nll_t + 1e-12
            if not correct:
                assert om == 1.0
        report("selective-SFT arithmetic (fixture ±1e-5 and 1000-row property suite)")


class TestRewardAcceptance:
    def test_reward_table_exact(self):
        table = [
            ("<think>r</think> ANSWER: B", "B", 6.0),
            ("ANSWER: B with no think block", "B", 5.0),
            ("<think>r</think> ANSWER: A or maybe ANSWER: B", "B", 4.5),
            ("<think>r</think> ANSWER: A", "B", 1.0),
            ("no think tags, ANSWER: A", "B", 0.0),
            ("<think>r</think> ANSWER: A ... ANSWER: C", "B", -0.5),
        ]
        for text, gold, expected in table:
            got = total_reward(text, gold)
            assert got.total == expected, (text, got)
            assert got.total == got.acc + got.fmt
        assert {row[2] for row in table} == {6.0, 5.0, 4.5, 1.0, 0.0, -0.5}
        report("reward table (6/6 reachable totals exact)")


class TestMetricsAcceptance:
    def test_metrics_against_brute_force(self):
        patterns = list(itertools.product([0, 1], repeat=5))
        for n in (1, 2, 3):
            rng = random.Random(n * 17)
            pools = [patterns] if n == 1 else None
            for trial in range(200 if n > 1 else len(patterns)):
                if n == 1:
                    chosen = [patterns[trial]]
                else:
                    chosen = [rng.choice(patterns) for _ in range(n)]
                sets = [from_pattern(p) for p in chosen]
                assert avg_at_k(sets) == pytest.approx(brute_avg(sets), abs=1e-12)
                assert cons_at_k(sets) == pytest.approx(brute_cons(sets), abs=1e-12)
                assert pass_at_k(sets) == pytest.approx(brute_pass(sets), abs=1e-12)

        # crafted vote ties: earliest generated among tied modes
        tie = GenerationSet("q", ("B", "C", "B", "C", "A"), "B")
        assert cons_at_k([tie]) == 1.0
        tie2 = GenerationSet("q", ("C", "B", "B", "C", "A"), "B")
        assert cons_at_k([tie2]) == 0.0

        rng = random.Random(500)
        for _ in range(500):
            n = rng.randint(1, 6)
            k = rng.randint(1, 5)
            sets = [
                GenerationSet(f"q{i}",
                              tuple(rng.choice(["A", "B", "C", "∅"]) for _ in range(k)),
                              rng.choice(["A", "B"]))
                for i in range(n)
            ]
            rep = evaluate(sets)
            assert rep.avg_at_k <= rep.pass_at_k + 1e-12
            assert rep.cons_at_k <= rep.pass_at_k + 1e-12
        report("metrics (exhaustive brute-force agreement, tie rule, 500 random bounds)")


class TestBm25Acceptance:
    def test_bm25_against_brute_force(self):
        rng = random.Random(4321)
        for trial in range(50):
            n = rng.choice([3, 5, 10, 25, 60, 120, 300, 1000])
            pairs = random_corpus(rng, n)
            index = build_bm25_index(pairs)
            query = " ".join(rng.choice(pairs)[1].split()[:5]) or "enzyme"
            expected = brute_force_scores(pairs, query)
            want = sorted(expected.items(), key=lambda kv: (-kv[1], kv[0]))[:10]
            got = retrieve_top_k(index, query, 10)
            assert [p for p, _ in got] == [p for p, _ in want], f"trial {trial}"

        pairs = [("self", "enzyme serum dose"), ("twin", "enzyme serum dose"), ("far", "lesion")]
        index = build_bm25_index(pairs)
        got = retrieve_top_k(index, "enzyme serum dose", 2, exclude={"self"})
        assert got[0][0] == "twin"
        assert all(pid != "self" for pid, _ in got)
        report("bm25 (top-10 equals brute force on 50 corpora; self-pair excluded)")


class TestEndToEndAcceptance:
    def test_determinism_and_resume(self, tmp_path, bundled_config, bundled_corpus_path):
        """Two timed runs byte-match; resuming after any stage boundary recomputes nothing."""
        cfg, corpus = bundled_config, bundled_corpus_path
        dir_a, dir_b = tmp_path / "a", tmp_path / "b"

        started = time.perf_counter()
        results_a = run_all(cfg, dir_a, corpus)
        results_b = run_all(cfg, dir_b, corpus)
        elapsed = time.perf_counter() - started
        assert elapsed < 60.0, f"two runs took {elapsed:.1f}s"
        assert all(r.status == "computed" for r in results_a + results_b)

        files_a = sorted(p.relative_to(dir_a) for p in dir_a.rglob("*") if p.is_file())
        files_b = sorted(p.relative_to(dir_b) for p in dir_b.rglob("*") if p.is_file())
        assert files_a == files_b
        for rel in files_a:
            assert (dir_a / rel).read_bytes() == (dir_b / rel).read_bytes(), rel

        chunks = read_jsonl(dir_a / "chunks.jsonl")
        assert len(chunks) == 50

        # stop after each stage boundary, then resume with run-all
        for boundary in range(1, len(STAGE_ORDER) + 1):
            run_dir = tmp_path / f"resume{boundary}"
            for stage in STAGE_ORDER[:boundary]:
                run_stage(stage, cfg, run_dir, corpus)
            results = run_all(cfg, run_dir, corpus)
            statuses = {r.stage: r.status for r in results}
            for stage in STAGE_ORDER[:boundary]:
                assert statuses[stage] == "skipped", (boundary, stage)
            for stage in STAGE_ORDER[boundary:]:
                assert statuses[stage] == "computed", (boundary, stage)
            for rel in files_a:
                assert (run_dir / rel).read_bytes() == (dir_a / rel).read_bytes(), (boundary, rel)
        report(f"end-to-end determinism (two runs in {elapsed:.1f}s, byte-identical; "
               f"resume at all {len(STAGE_ORDER)} boundaries recomputed nothing)")
