"""scikit-learn style front door.

:class:`RobustRadiusClassifier` wraps model construction and the training
loop behind the usual fit/predict/predict_proba surface, and
:class:`ConfidenceScorer` turns a fitted classifier into a per-sample
confidence scorer whose hyperparameters can be tuned on validation data.
Both subclass ``sklearn.base.BaseEstimator``, so ``get_params``/``set_params``,
``clone``, and pipeline composition work as usual.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .metrics import DetectionReport, detection_report
from .model import MLP
from .radius import RadiusConfig
from .scores import (
    ConfidenceRecord,
    ScoreConfig,
    confidence_scores,
    grids_for_method,
    sweep_hyperparameters,
)
from .training import TrainConfig, train
from .validation import check_labels, check_matrix


class RobustRadiusClassifier(BaseEstimator, ClassifierMixin):
    """Feed-forward classifier with optional perturbation-aware training.

    ``objective`` selects the loss: plain cross-entropy, adversarial ascent
    ("at"), descent ("reverse_at"), or the correctness-branched variant
    ("rat") that pushes correctly classified points away from the decision
    boundary and pulls misclassified ones toward it.
    """

    def __init__(
        self,
        hidden_dims=(32,),
        objective="standard",
        epsilon=0.001,
        epochs=100,
        batch_size=128,
        lr_init=0.1,
        momentum=0.9,
        warmup_epochs=5,
        schedule="cosine",
        mixup_alpha=None,
        mixup_on_rat=False,
        temperature=1.0,
        input_scale=None,
        seed=0,
    ):
        self.hidden_dims = hidden_dims
        self.objective = objective
        self.epsilon = epsilon
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr_init = lr_init
        self.momentum = momentum
        self.warmup_epochs = warmup_epochs
        self.schedule = schedule
        self.mixup_alpha = mixup_alpha
        self.mixup_on_rat = mixup_on_rat
        self.temperature = temperature
        self.input_scale = input_scale
        self.seed = seed

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            objective=self.objective,
            epsilon=self.epsilon,
            epochs=self.epochs,
            batch_size=self.batch_size,
            lr_init=self.lr_init,
            momentum=self.momentum,
            warmup_epochs=self.warmup_epochs,
            schedule=self.schedule,
            mixup_alpha=self.mixup_alpha,
            mixup_on_rat=self.mixup_on_rat,
            temperature=self.temperature,
            seed=self.seed,
        )

    def fit(self, X, y):
        from .data import Dataset

        X = check_matrix(X)
        y = check_labels(y, X.shape[0])
        self.classes_, encoded = np.unique(y, return_inverse=True)
        if self.classes_.shape[0] < 2:
            raise ValueError("need at least two classes to fit a classifier")
        dims = [X.shape[1], *[int(h) for h in self.hidden_dims], self.classes_.shape[0]]
        scale = self.input_scale if self.input_scale is not None else 1.0 / float(X.std())
        self.model_ = MLP(dims, seed=self.seed, input_scale=scale)
        dataset = Dataset(
            X, encoded.astype(np.int64), "fit", (float(X.min()), float(X.max()))
        )
        _, self.train_log_ = train(self.model_, dataset, self._train_config())
        self.n_features_in_ = X.shape[1]
        return self

    def _require_fitted(self) -> MLP:
        if not hasattr(self, "model_"):
            raise NotFittedError(
                f"This {type(self).__name__} instance is not fitted yet; call fit first."
            )
        return self.model_

    def decision_function(self, X) -> np.ndarray:
        return self._require_fitted().logits_batch(check_matrix(X))

    def predict(self, X) -> np.ndarray:
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]

    def predict_proba(self, X) -> np.ndarray:
        z = self.decision_function(X) / self.temperature
        z = z - z.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)


class ConfidenceScorer(BaseEstimator):
    """Per-sample confidence scores from a fitted classifier.

    ``fit(X, y)`` is the validation-set hyperparameter sweep: it grid-searches
    the temperature and preprocessing magnitude the method actually tunes,
    minimizing AURC, and stores the winners as ``temperature_`` and
    ``preprocess_eps_``.  ``score_samples`` never looks at labels.
    """

    def __init__(
        self,
        classifier=None,
        method="rr_fast",
        temperature=1.0,
        preprocess_eps=0.0,
        tune=True,
        radius_config=None,
    ):
        self.classifier = classifier
        self.method = method
        self.temperature = temperature
        self.preprocess_eps = preprocess_eps
        self.tune = tune
        self.radius_config = radius_config

    def _mlp(self) -> MLP:
        clf = self.classifier
        if isinstance(clf, MLP):
            return clf
        if hasattr(clf, "model_"):
            return clf.model_
        if isinstance(clf, RobustRadiusClassifier):
            raise NotFittedError("the wrapped classifier is not fitted yet")
        raise ValueError("classifier must be a fitted RobustRadiusClassifier or an MLP")

    def _score_config(self, temperature=None, eps=None) -> ScoreConfig:
        return ScoreConfig(
            method=self.method,
            temperature=self.temperature if temperature is None else temperature,
            preprocess_eps=self.preprocess_eps if eps is None else eps,
            radius_config=self.radius_config or RadiusConfig(),
        )

    def fit(self, X, y):
        model = self._mlp()
        X = check_matrix(X)
        y = check_labels(y, X.shape[0])
        if not self.tune:
            self.temperature_ = self.temperature
            self.preprocess_eps_ = self.preprocess_eps
            self.val_aurc_ = None
            return self
        preds = model.predict_batch(X)

        def builder(temp, eps):
            scores = confidence_scores(model, X, self._score_config(temp, eps))
            return [
                ConfidenceRecord(i, float(s), int(p), int(t), bool(p == t))
                for i, (s, p, t) in enumerate(zip(scores, preds, y))
            ]

        T_grid, eps_grid = grids_for_method(self.method)
        self.temperature_, self.preprocess_eps_, self.val_aurc_, _ = sweep_hyperparameters(
            builder, T_grid, eps_grid
        )
        return self

    def score_samples(self, X) -> np.ndarray:
        """Confidence per row; higher means the prediction is more trustworthy."""
        model = self._mlp()
        temp = getattr(self, "temperature_", self.temperature)
        eps = getattr(self, "preprocess_eps_", self.preprocess_eps)
        return confidence_scores(model, check_matrix(X), self._score_config(temp, eps))

    def report(self, X, y, dataset: str = "", seed: int = 0) -> DetectionReport:
        """Detection-quality report of this scorer on labelled data."""
        model = self._mlp()
        X = check_matrix(X)
        y = check_labels(y, X.shape[0])
        preds = model.predict_batch(X)
        scores = self.score_samples(X)
        records = [
            ConfidenceRecord(i, float(s), int(p), int(t), bool(p == t))
            for i, (s, p, t) in enumerate(zip(scores, preds, y))
        ]
        return detection_report(records, method=self.method, dataset=dataset, seed=seed)
