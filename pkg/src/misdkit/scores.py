"""Confidence scores and the validation-set hyperparameter sweep.

Every score is "higher means more confident" and is consumed through the same
:class:`ConfidenceRecord` shape, so the detection metrics treat softmax-based
scores and radius estimates identically.  Radius sentinels surface as ``inf``
and therefore rank above every finite score.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .exceptions import ParameterError
from .radius import RadiusConfig, rr_bs, rr_fast

METHODS = ("msr", "odin", "doctor", "rr_bs", "rr_fast")

# Validation-sweep grids for the softmax temperature and the preprocessing
# perturbation magnitude.
TEMPERATURE_GRID = (
    0.2, 0.4, 0.6, 0.8, 1.0, 1.1, 1.2, 1.3, 1.4, 1.5, 2.0, 2.5, 3.0, 100.0, 1000.0,
)
EPSILON_GRID = (
    0.0, 5e-05, 0.0001, 0.00015, 0.0002, 0.00025, 0.0003, 0.00035, 0.0004,
    0.0006, 0.0008, 0.001,
)


@dataclass
class ScoreConfig:
    """Which score to compute and with what hyperparameters.

    ``preprocess_eps`` is the magnitude of the confidence-raising input nudge
    applied before softmax scores are read out; radius methods ignore it.
    ``radius_config`` feeds the rr_* methods.
    """

    method: str = "msr"
    temperature: float = 1.0
    preprocess_eps: float = 0.0
    radius_config: RadiusConfig = field(default_factory=RadiusConfig)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ParameterError(f"unknown score method {self.method!r}; choose from {METHODS}")
        if self.temperature <= 0:
            raise ParameterError(f"temperature must be > 0, got {self.temperature}")
        if self.preprocess_eps < 0:
            raise ParameterError(f"preprocess_eps must be >= 0, got {self.preprocess_eps}")

    @property
    def tunables(self) -> tuple[bool, bool]:
        """(sweeps temperature, sweeps preprocessing eps) for this method."""
        if self.method == "msr":
            return (False, True)
        if self.method in ("odin", "doctor"):
            return (True, True)
        return (True, False)  # radius methods take only T


@dataclass(frozen=True)
class ConfidenceRecord:
    """Per-example scoring outcome: the unit every detection metric consumes."""

    index: int
    score: float
    predicted: int
    label: int
    correct: bool


def msr(model, x, temperature: float = 1.0) -> float:
    """Maximum softmax response: the predicted class's probability."""
    p = _softmax_rows(model.logits_batch(np.atleast_2d(x)), temperature)
    return float(p[0].max())


def doctor(model, x, temperature: float = 1.0) -> float:
    """Softmax concentration score: sum of squared class probabilities.

    Equals 1 on a one-hot distribution and 1/K on a uniform one, so it orders
    predictions the same way "higher is more confident" as msr does.
    """
    p = _softmax_rows(model.logits_batch(np.atleast_2d(x)), temperature)
    return float((p[0] ** 2).sum())


def _softmax_rows(z: np.ndarray, temperature: float) -> np.ndarray:
    if temperature <= 0:
        raise ParameterError(f"temperature must be > 0, got {temperature}")
    s = z / temperature
    s = s - s.max(axis=1, keepdims=True)
    e = np.exp(s)
    return e / e.sum(axis=1, keepdims=True)


def _score_graph(model, X: np.ndarray, kind: str, temperature: float) -> tuple[T.Tensor, T.Tensor]:
    """Differentiable per-row score; returns (input tensor, score vector)."""
    xt = T.Tensor(X, requires_grad=True)
    z = model.forward_tensor(xt)
    p = T.softmax(z, temperature)
    if kind == "doctor":
        s = T.tsum(T.mul(p, p), axis=1)
    else:  # msr family
        s = T.take_rows(p, np.argmax(z.data, axis=1))
    return xt, s


def preprocess_input(model, x, kind: str, temperature: float, eps: float) -> np.ndarray:
    """One signed gradient step that raises the confidence score.

    Moves each input by eps * sign(d log C / dx); the caller then reads the
    score at the shifted point.  The L-inf displacement is at most eps by
    construction.  Costs one extra backward pass per example.
    """
    if eps < 0:
        raise ParameterError(f"eps must be >= 0, got {eps}")
    X = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if eps == 0:
        return X
    xt, s = _score_graph(model, X, kind, temperature)
    T.backward(T.tsum(T.log(s)))
    model.note_backward(X.shape[0])
    model.zero_grad()
    return X + eps * np.sign(xt.grad)


def _logit_scores(model, X: np.ndarray, kind: str, temperature: float, eps: float) -> np.ndarray:
    Xs = preprocess_input(model, X, kind, temperature, eps) if eps > 0 else np.atleast_2d(X)
    p = _softmax_rows(model.logits_batch(Xs), temperature)
    if kind == "doctor":
        return (p**2).sum(axis=1)
    return p.max(axis=1)


def confidence(model, x, config: ScoreConfig) -> float:
    """Score one input under the configured method."""
    return float(confidence_scores(model, np.atleast_2d(x), config)[0])


def confidence_scores(model, X, config: ScoreConfig) -> np.ndarray:
    """Vector of scores for the rows of X.

    msr/odin/doctor evaluate in one batched pass (plus one preprocessing
    backward when eps > 0); the radius methods estimate per row and report the
    radius itself, with the no-flip sentinel mapped to ``inf``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    method = config.method
    if method in ("msr", "odin"):
        return _logit_scores(model, X, "msr", config.temperature, config.preprocess_eps)
    if method == "doctor":
        return _logit_scores(model, X, "doctor", config.temperature, config.preprocess_eps)

    rcfg = config.radius_config
    if rcfg.temperature != config.temperature:
        rcfg = dataclasses.replace(rcfg, temperature=config.temperature)
    estimator = rr_bs if method == "rr_bs" else rr_fast
    return np.array([estimator(model, row, rcfg).value for row in X])


def confidence_records(model, dataset, indices, config: ScoreConfig) -> list[ConfidenceRecord]:
    """Score the selected rows and pair each with its prediction outcome.

    The predicted class always comes from the clean input (preprocessing only
    shifts the score), and correctness compares it with the dataset label.
    """
    idx = np.asarray(indices, dtype=np.int64)
    X = dataset.inputs[idx]
    preds = model.predict_batch(X)
    scores = confidence_scores(model, X, config)
    labels = dataset.labels[idx]
    return [
        ConfidenceRecord(int(i), float(s), int(p), int(t), bool(p == t))
        for i, s, p, t in zip(idx, scores, preds, labels)
    ]


def sweep_hyperparameters(records_builder, T_grid=None, eps_grid=None):
    """Exhaustive grid search minimizing AURC on validation records.

    ``records_builder(T, eps)`` must return the validation ConfidenceRecords
    for that hyperparameter pair.  Ties break toward the lower temperature,
    then the lower eps.  Returns ``(best_T, best_eps, best_aurc, table)``
    where table rows are (T, eps, aurc).
    """
    from .metrics import aurc

    T_grid = list(TEMPERATURE_GRID if T_grid is None else T_grid)
    eps_grid = list(EPSILON_GRID if eps_grid is None else eps_grid)
    if not T_grid or not eps_grid:
        raise ParameterError("sweep grids must be non-empty")

    table = []
    best = None
    for temp in T_grid:
        for eps in eps_grid:
            records = records_builder(temp, eps)
            if not records:
                raise ParameterError("records_builder returned an empty validation set")
            value = aurc(records)
            table.append((temp, eps, value))
            if best is None or value < best[2]:
                best = (temp, eps, value)
    return best[0], best[1], best[2], table


def grids_for_method(method: str) -> tuple[list[float], list[float]]:
    """The sweep grids a method actually tunes; fixed axes collapse to a point."""
    sweep_T, sweep_eps = ScoreConfig(method=method).tunables
    T_grid = list(TEMPERATURE_GRID) if sweep_T else [1.0]
    eps_grid = list(EPSILON_GRID) if sweep_eps else [0.0]
    return T_grid, eps_grid


def write_score_csv(records: list[ConfidenceRecord], method: str, path) -> None:
    """Dump records: index,method,score,predicted,label,correct."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("index,method,score,predicted,label,correct\n")
        for r in records:
            fh.write(
                f"{r.index},{method},{repr(float(r.score))},{r.predicted},{r.label},{int(r.correct)}\n"
            )
