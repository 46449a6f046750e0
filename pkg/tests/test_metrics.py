import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from misdkit.exceptions import ParameterError, UndefinedMetricError
from misdkit.metrics import (
    auroc,
    auroc_above_confidence,
    aurc,
    detection_report,
    fpr_at_tpr,
    risk_coverage,
)
from misdkit.scores import ConfidenceRecord


def rec(index, score, correct):
    return ConfidenceRecord(index, float(score), 0, 0 if correct else 1, correct)


def records_from(scores, corrects):
    return [rec(i, s, bool(c)) for i, (s, c) in enumerate(zip(scores, corrects))]


# -- independent oracles ----------------------------------------------------


def auroc_pairwise(records):
    """O(n^2) pairwise counting: P(correct > wrong) + 0.5 P(tie)."""
    cor = [r.score for r in records if r.correct]
    wro = [r.score for r in records if not r.correct]
    total = 0.0
    for c in cor:
        for w in wro:
            total += 1.0 if c > w else (0.5 if c == w else 0.0)
    return total / (len(cor) * len(wro))


def fpr_threshold_enumeration(records, target=0.95):
    """Try every distinct threshold, pick the first reaching the TPR target."""
    wrong = np.array([r.score for r in records if not r.correct])
    correct = np.array([r.score for r in records if r.correct])
    if correct.size == 0:
        return 0.0  # nothing can be falsely rejected
    taus = sorted(set(list(wrong) + list(correct))) + [math.inf]
    for tau in taus:
        if (wrong < tau).mean() >= target:
            return (correct < tau).mean()
    return (correct < math.inf).mean()


# -- risk-coverage / aurc -----------------------------------------------------


class TestRiskCoverage:
    def test_all_correct_zero_risk(self):
        curve = risk_coverage(records_from([0.9, 0.8, 0.7], [1, 1, 1]))
        assert all(risk == 0.0 for _, risk in curve)

    def test_one_wrong_lowest_score(self):
        curve = risk_coverage(records_from([0.9, 0.8, 0.7, 0.1], [1, 1, 1, 0]))
        assert [risk for _, risk in curve] == [0.0, 0.0, 0.0, 0.25]

    def test_coverage_strictly_increasing_to_one(self):
        curve = risk_coverage(records_from([0.5, 0.4, 0.3], [1, 0, 1]))
        coverages = [c for c, _ in curve]
        assert coverages == sorted(set(coverages)) and coverages[-1] == 1.0

    def test_empty_rejected(self):
        with pytest.raises(ParameterError):
            risk_coverage([])

    def test_reversing_best_scores_gives_worst_curve(self):
        # enumerate all orderings of a fixed correctness multiset (n <= 6):
        # negating the scores of the optimal ranking lands on the maximum
        corrects = [1, 1, 0, 1, 0]
        best_scores = [5.0, 4.0, 1.0, 3.0, 2.0]  # wrong examples ranked last
        reversed_aurc = aurc(records_from([-s for s in best_scores], corrects))
        worst = max(
            aurc(records_from(perm, corrects))
            for perm in itertools.permutations([5.0, 4.0, 3.0, 2.0, 1.0])
        )
        assert reversed_aurc == worst


class TestAurc:
    def test_all_correct(self):
        assert aurc(records_from([0.9, 0.1], [1, 1])) == 0.0

    def test_one_wrong_ranked_last(self):
        assert aurc(records_from([4, 3, 2, 1], [1, 1, 1, 0])) == 0.0625

    def test_one_wrong_ranked_first(self):
        value = aurc(records_from([4, 3, 2, 1], [0, 1, 1, 1]))
        np.testing.assert_allclose(value, (1 + 0.5 + 1 / 3 + 0.25) / 4)

    def test_best_ranking_minimizes_aurc(self):
        # ranking all wrong examples last is optimal over every permutation
        for corrects in itertools.product([0, 1], repeat=6):
            if not any(corrects) or all(corrects):
                continue
            scores = list(range(6, 0, -1))
            best_records = records_from(
                scores, sorted(corrects, reverse=True)
            )
            best = aurc(best_records)
            sampled = [
                aurc(records_from(scores, perm))
                for perm in set(itertools.permutations(corrects))
            ]
            assert min(sampled) == best


class TestAuroc:
    def test_perfect_separation(self):
        records = records_from([0.9, 0.8, 0.1, 0.2], [1, 1, 0, 0])
        assert auroc(records) == 1.0

    def test_all_ties(self):
        records = records_from([0.5] * 6, [1, 1, 1, 0, 0, 0])
        assert auroc(records) == 0.5

    def test_single_class_undefined(self):
        with pytest.raises(UndefinedMetricError):
            auroc(records_from([0.5, 0.6], [1, 1]))

    @given(st.integers(0, 10_000))
    @settings(max_examples=60, deadline=None)
    def test_matches_pairwise_oracle(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(4, 64))
        scores = rng.choice([0.1, 0.25, 0.5, 0.9, 1.0], size=n)  # force ties
        corrects = rng.integers(0, 2, size=n)
        if corrects.all() or not corrects.any():
            corrects[0] = 0
            corrects[1] = 1
        records = records_from(scores, corrects)
        np.testing.assert_allclose(auroc(records), auroc_pairwise(records), rtol=0, atol=1e-12)

    def test_negation_identity(self):
        rng = np.random.default_rng(1)
        scores = rng.permutation(20).astype(float)  # tie-free
        corrects = rng.integers(0, 2, size=20)
        corrects[0], corrects[1] = 0, 1
        fwd = auroc(records_from(scores, corrects))
        rev = auroc(records_from(-scores, corrects))
        np.testing.assert_allclose(fwd + rev, 1.0)


class TestFprAtTpr:
    def test_perfect_separation(self):
        assert fpr_at_tpr(records_from([0.9, 0.8, 0.1, 0.2], [1, 1, 0, 0])) == 0.0

    def test_all_equal_scores(self):
        assert fpr_at_tpr(records_from([0.5] * 8, [1, 1, 1, 0, 0, 0, 1, 1])) == 1.0

    def test_no_wrong_undefined(self):
        with pytest.raises(UndefinedMetricError):
            fpr_at_tpr(records_from([0.5, 0.6], [1, 1]))

    def test_hand_built_twenty(self):
        rng = np.random.default_rng(7)
        scores = rng.normal(size=20)
        corrects = np.r_[np.ones(14, dtype=int), np.zeros(6, dtype=int)]
        rng.shuffle(corrects)
        records = records_from(scores, corrects)
        assert fpr_at_tpr(records) == fpr_threshold_enumeration(records)

    @given(st.integers(0, 10_000))
    @settings(max_examples=60, deadline=None)
    def test_matches_enumeration_oracle(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 50))
        scores = rng.choice([0.0, 0.2, 0.4, 0.8, 1.0, math.inf], size=n)
        corrects = rng.integers(0, 2, size=n)
        if corrects.all():
            corrects[0] = 0
        records = records_from(scores, corrects)
        assert fpr_at_tpr(records) == fpr_threshold_enumeration(records)


class TestHighConfidenceAuroc:
    def test_zero_threshold_equals_plain(self):
        records = records_from([0.9, 0.3, 0.8, 0.2], [1, 0, 1, 0])
        probs = [0.9, 0.3, 0.8, 0.2]
        assert auroc_above_confidence(records, probs, 0.0) == auroc(records)

    def test_threshold_above_max_undefined(self):
        records = records_from([0.9, 0.3], [1, 0])
        with pytest.raises(UndefinedMetricError):
            auroc_above_confidence(records, [0.9, 0.3], 0.95)

    def test_matches_filtered_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            n = int(rng.integers(6, 40))
            scores = rng.normal(size=n)
            probs = rng.uniform(1 / 3, 1.0, size=n)
            corrects = rng.integers(0, 2, size=n)
            records = records_from(scores, corrects)
            tau = 0.55
            kept = [r for r, p in zip(records, probs) if p > tau]
            has_both = any(r.correct for r in kept) and any(not r.correct for r in kept)
            if not kept or not has_both:
                with pytest.raises(UndefinedMetricError):
                    auroc_above_confidence(records, probs, tau)
                continue
            np.testing.assert_allclose(
                auroc_above_confidence(records, probs, tau), auroc_pairwise(kept), atol=1e-12
            )


class TestInvariances:
    @given(st.integers(0, 5_000))
    @settings(max_examples=40, deadline=None)
    def test_strictly_increasing_transform(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(4, 30))
        scores = rng.normal(size=n)
        corrects = rng.integers(0, 2, size=n)
        corrects[0], corrects[1] = 0, 1
        base = records_from(scores, corrects)
        warped = records_from(np.exp(scores) * 3.0 + 1.0, corrects)
        np.testing.assert_allclose(auroc(base), auroc(warped), atol=1e-12)
        np.testing.assert_allclose(aurc(base), aurc(warped), atol=1e-12)
        np.testing.assert_allclose(fpr_at_tpr(base), fpr_at_tpr(warped), atol=1e-12)

    def test_sentinel_sorts_first_with_index_tiebreak(self):
        records = [
            rec(2, math.inf, True),
            rec(0, math.inf, False),
            rec(1, 0.9, True),
        ]
        curve = risk_coverage(records)
        # index 0 (wrong, sentinel) precedes index 2 at the same score
        assert curve[0][1] == 1.0 and curve[1][1] == 0.5


class TestDetectionReport:
    def test_fields_consistent(self):
        records = records_from([0.9, 0.8, 0.4, 0.3], [1, 1, 0, 1])
        report = detection_report(records, method="msr", dataset="toy", seed=3)
        assert report.accuracy == 0.75
        assert report.curve[-1][1] == pytest.approx(1 - report.accuracy)
        assert report.aurc_x1000 == pytest.approx(1000 * report.aurc)
        payload = report.to_json_dict()
        assert set(payload) >= {
            "auroc", "aurc", "aurc_x1000", "fpr95", "accuracy", "n", "method", "dataset", "seed",
        }
        assert payload["n"] == 4 and payload["method"] == "msr"

    def test_perfect_classifier_flags_undefined(self):
        report = detection_report(records_from([0.9, 0.8], [1, 1]))
        assert report.aurc == 0.0
        assert report.auroc is None and report.fpr95 is None
        assert set(report.undefined_metrics) == {"auroc", "fpr95"}
