"""Selective-classification metrics over ConfidenceRecords.

Conventions, fixed so results are exactly reproducible:

* The positive class is "misclassified": TPR is the fraction of wrong
  predictions rejected, FPR the fraction of correct ones rejected.
* Records are ranked by score descending; equal scores keep stable order by
  record index.  Sentinel (+inf) scores therefore sit at the top.
* AURC is the plain mean of the selective risk over the n discrete coverage
  points k/n (no trapezoid), matching the selective-risk literature the
  ``x1000`` reporting convention comes from.
* FPR@TPR uses step semantics with no interpolation: the lowest rejection
  threshold whose TPR reaches the target.

All three ranking metrics are invariant under strictly increasing score
transformations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ParameterError, UndefinedMetricError
from .scores import ConfidenceRecord


def _sorted_by_confidence(records: list[ConfidenceRecord]) -> list[ConfidenceRecord]:
    return sorted(records, key=lambda r: (-r.score, r.index))


def risk_coverage(records: list[ConfidenceRecord]) -> list[tuple[float, float]]:
    """Risk-coverage curve: accept the top-k by score, measure error among them.

    Point k has coverage k/n and risk (# wrong in top k) / k; coverage rises
    strictly to 1.0 where the risk equals the overall error rate.
    """
    if not records:
        raise ParameterError("risk_coverage needs at least one record")
    ordered = _sorted_by_confidence(records)
    n = len(ordered)
    curve = []
    wrong = 0
    for k, rec in enumerate(ordered, start=1):
        wrong += not rec.correct
        curve.append((k / n, wrong / k))
    return curve


def aurc(records: list[ConfidenceRecord]) -> float:
    """Area under the risk-coverage curve: mean risk over all coverage points."""
    curve = risk_coverage(records)
    return float(sum(risk for _, risk in curve) / len(curve))


def auroc(records: list[ConfidenceRecord]) -> float:
    """Probability a random correct example outscores a random wrong one.

    Computed as the Mann-Whitney rank statistic with ties counted one half.
    Needs both a correct and a wrong record, otherwise the metric is
    undefined.
    """
    scores = np.array([r.score for r in records])
    correct = np.array([r.correct for r in records])
    n_c = int(correct.sum())
    n_w = len(records) - n_c
    if n_c == 0 or n_w == 0:
        raise UndefinedMetricError("auroc needs at least one correct and one wrong record")
    ranks = _average_ranks(scores)
    u = ranks[correct].sum() - n_c * (n_c + 1) / 2.0
    return float(u / (n_c * n_w))


def _average_ranks(scores: np.ndarray) -> np.ndarray:
    """1-based ranks, ties sharing the mean of their rank span."""
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores))
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def fpr_at_tpr(records: list[ConfidenceRecord], tpr_target: float = 0.95) -> float:
    """FPR at the lowest "reject if score < tau" threshold reaching the TPR target.

    Candidate thresholds are the distinct score values plus +inf; among those
    whose TPR meets the target, the smallest is selected, which is also the
    one with the smallest FPR (both rates are nondecreasing in tau).  If even
    rejecting every finite score cannot reach the target (more than the
    allowed share of wrong records carry the sentinel), the FPR of that most
    aggressive threshold is reported.
    """
    wrong_scores = np.array([r.score for r in records if not r.correct])
    correct_scores = np.array([r.score for r in records if r.correct])
    if wrong_scores.size == 0:
        raise UndefinedMetricError("fpr_at_tpr needs at least one wrong record")
    if correct_scores.size == 0:
        return 0.0
    candidates = np.concatenate([np.unique(np.concatenate([wrong_scores, correct_scores])), [math.inf]])
    for tau in candidates:
        tpr = float((wrong_scores < tau).mean())
        if tpr >= tpr_target:
            return float((correct_scores < tau).mean())
    return float((correct_scores < math.inf).mean())


def auroc_above_confidence(
    records: list[ConfidenceRecord], msr_probs, prob_threshold: float
) -> float:
    """AUROC restricted to predictions whose softmax probability exceeds a bar.

    ``msr_probs`` aligns positionally with ``records`` and carries each
    example's maximum softmax probability; the filtered subset must still
    contain both outcomes.
    """
    probs = np.asarray(msr_probs, dtype=np.float64)
    if probs.shape != (len(records),):
        raise ParameterError("msr_probs must align one-to-one with records")
    kept = [r for r, p in zip(records, probs) if p > prob_threshold]
    if not kept:
        raise UndefinedMetricError(f"no records above probability threshold {prob_threshold}")
    return auroc(kept)


@dataclass
class DetectionReport:
    """Aggregated detection quality for one scoring method on one test set.

    ``auroc`` and ``fpr95`` are None when undefined (single-outcome test
    sets); ``undefined_metrics`` names them.  ``curve`` is the full
    risk-coverage polyline.
    """

    auroc: float | None
    aurc: float
    fpr95: float | None
    accuracy: float
    curve: list[tuple[float, float]]
    n_correct: int
    n_wrong: int
    method: str = ""
    dataset: str = ""
    seed: int = 0

    @property
    def aurc_x1000(self) -> float:
        return 1000.0 * self.aurc

    @property
    def undefined_metrics(self) -> list[str]:
        out = []
        if self.auroc is None:
            out.append("auroc")
        if self.fpr95 is None:
            out.append("fpr95")
        return out

    def to_json_dict(self) -> dict:
        return {
            "auroc": self.auroc,
            "aurc": self.aurc,
            "aurc_x1000": self.aurc_x1000,
            "fpr95": self.fpr95,
            "accuracy": self.accuracy,
            "n": self.n_correct + self.n_wrong,
            "method": self.method,
            "dataset": self.dataset,
            "seed": self.seed,
            "n_correct": self.n_correct,
            "n_wrong": self.n_wrong,
            "undefined_metrics": self.undefined_metrics,
        }


def detection_report(
    records: list[ConfidenceRecord], method: str = "", dataset: str = "", seed: int = 0
) -> DetectionReport:
    """Build the full report, flagging metrics that are undefined for this set."""
    n = len(records)
    if n == 0:
        raise ParameterError("detection_report needs at least one record")
    n_correct = sum(r.correct for r in records)
    n_wrong = n - n_correct
    try:
        auroc_value = auroc(records)
    except UndefinedMetricError:
        auroc_value = None
    try:
        fpr95_value = fpr_at_tpr(records, 0.95)
    except UndefinedMetricError:
        fpr95_value = None
    return DetectionReport(
        auroc=auroc_value,
        aurc=aurc(records),
        fpr95=fpr95_value,
        accuracy=n_correct / n,
        curve=risk_coverage(records),
        n_correct=n_correct,
        n_wrong=n_wrong,
        method=method,
        dataset=dataset,
        seed=seed,
    )


def write_curve_csv(curve: list[tuple[float, float]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("coverage,risk\n")
        for coverage, risk in curve:
            fh.write(f"{repr(float(coverage))},{repr(float(risk))}\n")
