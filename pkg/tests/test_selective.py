"""Selective-SFT arithmetic against hand-derived values.

The 3-case fixture freezes constants computed directly from the defining
sums (see oracle_entropy below): H(0.97,.01,.01,.01) = 0.16770054 nats,
omega = H/ln4 = 0.12097037, and the 2-token example loss
(0.12097037*0.03045921 + 1*1.20397280)/2 = 0.60382873.
"""
import json
import math
import random

import pytest

from s2k.errors import NormalizationError, TokenizerMismatch, UnsupportedCapability
from s2k.inference import ROLE_USER, TokenDistribution, context
from s2k.inference.ngram import BigramBackend
from s2k.selective import (
    annotate_example,
    entropy,
    export_weighted_dataset,
    weight,
    weighted_loss,
)

V4 = ("t0", "t1", "t2", "t3")


def dist(probs, tokens=V4, **kw):
    return TokenDistribution(tokens, tuple(probs), **kw)


def oracle_entropy(probs):
    # direct transcription of the defining sum, term by term
    total = 0.0
    for p in probs:
        if p > 0:
            total += p * math.log(p)
    return -total


class TestEntropy:
    def test_uniform_four_is_ln4(self):
        assert entropy(dist([0.25] * 4)) == pytest.approx(math.log(4), abs=1e-9)
        assert math.log(4) == pytest.approx(1.386294, abs=1e-6)

    def test_one_hot_is_zero(self):
        assert entropy(dist([1.0, 0.0, 0.0, 0.0])) == 0.0

    def test_three_case_fixture_value(self):
        probs = (0.97, 0.01, 0.01, 0.01)
        expected = oracle_entropy(probs)
        assert expected == pytest.approx(0.16770054, abs=1e-7)
        assert entropy(dist(probs)) == pytest.approx(expected, abs=1e-12)

    def test_normalization_error(self):
        with pytest.raises(NormalizationError):
            entropy(dist([0.5, 0.5, 0.5, 0.0]))

    def test_range(self):
        rng = random.Random(5)
        for _ in range(200):
            raw = [rng.random() for _ in range(4)]
            total = sum(raw)
            h = entropy(dist([x / total for x in raw]))
            assert 0.0 <= h <= math.log(4) + 1e-12

    def test_truncated_requires_flag_and_underestimates(self):
        top2 = dist([0.6, 0.3], tokens=("a", "b"), coverage="top_k", k=2, vocab_size=100)
        with pytest.raises(UnsupportedCapability):
            entropy(top2)
        est = entropy(top2, accept_truncated=True)
        # lumping the 0.1 tail into one outcome lower-bounds any true split
        assert est == pytest.approx(oracle_entropy([0.6, 0.3, 0.1]), abs=1e-12)
        true_spread = oracle_entropy([0.6, 0.3] + [0.001] * 100)
        assert est < true_spread


class TestWeight:
    def test_incorrect_token_full_weight(self):
        for h in (0.0, 0.5, math.log(4)):
            assert weight(0, h, 4) == 1.0

    def test_max_entropy_correct_token_full_weight(self):
        assert weight(1, math.log(4), 4) == pytest.approx(1.0, abs=1e-12)

    def test_spec_quoted_h_over_ln4(self):
        # with H given as an input this checks only the division
        assert weight(1, 0.167745, 4) == pytest.approx(0.121001, abs=1e-5)

    def test_fixture_omega_from_true_entropy(self):
        h = oracle_entropy((0.97, 0.01, 0.01, 0.01))
        assert weight(1, h, 4) == pytest.approx(0.12097037, abs=1e-7)

    def test_zero_entropy_correct_token_zero_weight(self):
        assert weight(1, 0.0, 4) == 0.0

    def test_bounds_and_clamp(self):
        assert weight(1, math.log(4) + 1e-10, 4) <= 1.0
        with pytest.raises(ValueError):
            weight(1, 2 * math.log(4), 4)


class FixedDistBackend:
    """Replays exactly the given teacher-forced distributions; V stays as given."""

    def __init__(self, dists):
        from s2k.inference import BackendDescriptor
        from s2k.tokenizers import WordTokenizer

        self.dists = list(dists)
        self.tokenizer = WordTokenizer()
        self.descriptor = BackendDescriptor("mock", "fixed-dists", True, True)

    def score_teacher_forced(self, ctx, targets):
        assert len(targets) <= len(self.dists)
        return self.dists[: len(targets)]

    def propose_window(self, ctx, w, decode):  # pragma: no cover - unused
        raise NotImplementedError

    def generate_text(self, ctx, decode):  # pragma: no cover - unused
        raise NotImplementedError


def table_backend(dists, targets=None):
    return FixedDistBackend(dists)


class TestAnnotate:
    def two_token_example(self):
        d1 = dist([0.97, 0.01, 0.01, 0.01])
        d2 = dist([0.7, 0.3, 0.0, 0.0])
        backend = table_backend([d1, d2])
        ctx = context((ROLE_USER, "P"))
        return annotate_example("ex", ctx, ["t0", "t1"], backend)

    def test_two_token_fixture_matches_hand_arithmetic(self):
        ex = self.two_token_example()
        h1 = oracle_entropy((0.97, 0.01, 0.01, 0.01))
        w1 = h1 / math.log(4)
        nll1, nll2 = -math.log(0.97), -math.log(0.3)
        assert ex.weights == pytest.approx((w1, 1.0), abs=1e-9)
        assert ex.nlls == pytest.approx((nll1, nll2), abs=1e-9)
        assert nll1 == pytest.approx(0.030459, abs=1e-6)
        assert nll2 == pytest.approx(1.203973, abs=1e-6)
        expected_loss = (w1 * nll1 + 1.0 * nll2) / 2
        assert expected_loss == pytest.approx(0.60382873, abs=1e-7)
        assert ex.loss_ref == pytest.approx(expected_loss, abs=1e-9)

    def test_records_carry_correctness(self):
        ex = self.two_token_example()
        assert [r.correct for r in ex.records] == [1, 0]
        assert [r.argmax_token for r in ex.records] == ["t0", "t0"]

    def test_all_mastered_one_hot_gives_zero_loss(self):
        dists = [dist([1.0, 0.0, 0.0, 0.0]), dist([1.0, 0.0, 0.0, 0.0])]
        backend = table_backend(dists, targets=("t0", "t0"))
        ex = annotate_example("ex", context((ROLE_USER, "P")), ["t0", "t0"], backend)
        assert ex.weights == (0.0, 0.0)
        assert ex.loss_ref == 0.0

    def test_all_wrong_reduces_to_plain_nll(self):
        dists = [dist([0.7, 0.3, 0.0, 0.0]), dist([0.6, 0.4, 0.0, 0.0])]
        backend = table_backend(dists, targets=("t1", "t1"))
        ex = annotate_example("ex", context((ROLE_USER, "P")), ["t1", "t1"], backend)
        assert ex.weights == (1.0, 1.0)
        assert ex.loss_ref == pytest.approx((-math.log(0.3) - math.log(0.4)) / 2)

    def test_argmax_tie_breaks_to_lowest_index(self):
        d = dist([0.5, 0.5, 0.0, 0.0])
        backend = table_backend([d], targets=("t1",))
        ex = annotate_example("ex", context((ROLE_USER, "P")), ["t1"], backend)
        assert ex.records[0].argmax_token == "t0"
        assert ex.records[0].correct == 0

    def test_property_suite_on_random_distributions(self):
        rng = random.Random(2024)
        for _ in range(1000):
            v = rng.randint(2, 8)
            raw = [rng.random() + 1e-9 for _ in range(v)]
            total = sum(raw)
            probs = [x / total for x in raw]
            target_idx = rng.randrange(v)
            h = entropy(dist(probs, tokens=tuple(f"w{i}" for i in range(v))))
            argmax_idx = probs.index(max(probs))
            correct = 1 if target_idx == argmax_idx else 0
            omega = weight(correct, min(h, math.log(v)), v)
            nll = -math.log(probs[target_idx])
            assert 0.0 <= omega <= 1.0
            assert omega * nll <= nll + 1e-12  # weighted never exceeds unweighted
            if not correct:
                assert omega == 1.0

    def test_base_invariance_log2_path(self):
        rng = random.Random(31)
        for _ in range(200):
            v = rng.randint(2, 6)
            raw = [rng.random() + 1e-6 for _ in range(v)]
            total = sum(raw)
            probs = [x / total for x in raw]
            h_nats = oracle_entropy(probs)
            h_bits = -sum(p * math.log2(p) for p in probs)
            assert h_nats / math.log(v) == pytest.approx(h_bits / math.log2(v), abs=1e-9)

    def test_mastery_null_check(self):
        # near-deterministic rows: weighted loss collapses relative to unweighted
        eps = 1e-6
        dists = [dist([1 - 3 * eps, eps, eps, eps]) for _ in range(4)]
        backend = table_backend(dists, targets=("t0", "t0", "t0", "t0"))
        ex = annotate_example("ex", context((ROLE_USER, "P")), ["t0"] * 4, backend)
        unweighted = sum(ex.nlls) / len(ex.nlls)
        assert ex.loss_ref < 1e-3 * unweighted


class TestWeightedLoss:
    def test_mean_over_masked_in_tokens(self):
        assert weighted_loss([0.5, 1.0], [2.0, 4.0]) == pytest.approx((1.0 + 4.0) / 2)

    def test_empty_is_zero(self):
        assert weighted_loss([], []) == 0.0

    def test_misaligned_rejected(self):
        with pytest.raises(ValueError):
            weighted_loss([1.0], [])


class TestExport:
    def make_examples(self):
        backend = BigramBackend.train(["alpha beta gamma alpha beta"])
        ctx = context((ROLE_USER, "Question: what follows alpha?\nAnswer:"))
        return [
            annotate_example(f"ex{i}", ctx, ["alpha", "beta"], backend)
            for i in range(3)
        ], backend

    def test_three_examples_three_lines_plus_manifest(self, tmp_path):
        examples, backend = self.make_examples()
        path = tmp_path / "weighted.jsonl"
        manifest = export_weighted_dataset(examples, path, backend.descriptor.to_dict(), "cfg123")
        lines = path.read_text().splitlines()
        assert len(lines) == 3
        rec = json.loads(lines[0])
        assert set(rec) == {"v", "example_id", "prompt", "answer", "weights", "nll", "loss_ref"}
        assert manifest["examples"] == 3
        assert manifest["entropy"] == "full"
        assert (tmp_path / "weighted.jsonl.manifest.json").exists()

    def test_reexport_byte_identical(self, tmp_path):
        examples, backend = self.make_examples()
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        export_weighted_dataset(examples, a, backend.descriptor.to_dict(), "cfg123")
        export_weighted_dataset(examples, b, backend.descriptor.to_dict(), "cfg123")
        assert a.read_bytes() == b.read_bytes()

    def test_mixed_tokenizer_rejected(self, tmp_path):
        examples, backend = self.make_examples()
        import dataclasses

        alien = dataclasses.replace(examples[0], tokenizer_id="other-v9")
        with pytest.raises(TokenizerMismatch):
            export_weighted_dataset([examples[1], alien], tmp_path / "x.jsonl",
                                    backend.descriptor.to_dict(), "cfg123")
