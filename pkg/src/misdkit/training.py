"""Training loops: standard cross-entropy and the perturbation objectives.

Three perturbation objectives share one loss shape, clean CE plus CE on a
single-step signed-gradient perturbation of the batch:

* ``at``          every example is perturbed up the loss (harder inputs);
* ``reverse_at``  every example is perturbed down the loss (easier inputs);
* ``rat``         examples the current model classifies correctly go up,
                  misclassified ones go down, which widens the radius gap
                  between the two groups.

SGD with momentum, linear warmup into a cosine schedule, optional mixup on
the clean term.  Fixed seed gives bitwise-identical runs: the shuffle order,
init, and mixup draws all derive from the config seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .exceptions import ParameterError, TrainingError
from .seeding import rng_for

OBJECTIVES = ("standard", "at", "reverse_at", "rat")


@dataclass
class TrainConfig:
    objective: str = "standard"
    epsilon: float = 0.001
    epochs: int = 100
    batch_size: int = 128
    lr_init: float = 0.1
    momentum: float = 0.9
    warmup_epochs: int = 5
    schedule: str = "cosine"
    mixup_alpha: float | None = None
    mixup_on_rat: bool = False
    temperature: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ParameterError(f"unknown objective {self.objective!r}; choose from {OBJECTIVES}")
        if self.epsilon < 0:
            raise ParameterError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ParameterError("epochs and batch_size must be positive")
        if self.lr_init <= 0:
            raise ParameterError(f"lr_init must be positive, got {self.lr_init}")
        if not 0 <= self.warmup_epochs < self.epochs:
            raise ParameterError("need 0 <= warmup_epochs < epochs")
        if self.schedule not in ("constant", "cosine"):
            raise ParameterError(f"unknown schedule {self.schedule!r}")
        if self.mixup_alpha is not None and self.mixup_alpha <= 0:
            raise ParameterError("mixup_alpha must be positive when set")


@dataclass
class TrainLog:
    """Per-epoch (loss, accuracy, lr) plus a checksum of the final weights."""

    epochs: list[tuple[float, float, float]] = field(default_factory=list)
    final_checksum: str = ""

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("epoch,loss,acc,lr\n")
            for i, (loss, acc, lr) in enumerate(self.epochs):
                fh.write(f"{i},{repr(float(loss))},{repr(float(acc))},{repr(float(lr))}\n")


def lr_at_epoch(config: TrainConfig, epoch: int) -> float:
    """Linear warmup to lr_init, then the configured decay."""
    if config.warmup_epochs > 0 and epoch < config.warmup_epochs:
        return config.lr_init * (epoch + 1) / config.warmup_epochs
    if config.schedule == "constant":
        return config.lr_init
    span = config.epochs - config.warmup_epochs
    progress = (epoch - config.warmup_epochs) / span
    return config.lr_init * 0.5 * (1.0 + math.cos(math.pi * progress))


def perturb_for_objective(model, X, y, objective: str, epsilon: float, temperature: float = 1.0):
    """Signed-gradient batch perturbation for one training objective.

    ``at`` ascends the loss on every row and ``reverse_at`` descends it;
    ``rat`` branches per row on whether the current model's prediction matches
    the label (ascent when it does, descent when it does not).  Correctness is
    read from the same tracked forward pass that supplies the gradients, so
    the flags always reflect the current parameters.  The result stays within
    the L-inf epsilon ball of X.
    """
    if objective not in OBJECTIVES:
        raise ParameterError(f"unknown objective {objective!r}")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if objective == "standard" or epsilon == 0:
        return X.copy() if objective != "standard" else X
    y = np.atleast_1d(np.asarray(y, dtype=np.int64))
    logits, _, grad = model.ce_input_grad(X, y, temperature)
    if objective == "at":
        sign = np.ones((X.shape[0], 1))
    elif objective == "reverse_at":
        sign = -np.ones((X.shape[0], 1))
    else:
        correct = np.argmax(logits, axis=1) == y
        sign = np.where(correct, 1.0, -1.0)[:, None]
    return X + epsilon * sign * np.sign(grad)


def mixup_batch(X, y, alpha: float, rng: np.random.Generator):
    """Convexly combine the batch with a seeded permutation of itself.

    Returns ``(X_mixed, y_a, y_b, lam)`` with lam drawn from Beta(alpha,
    alpha); the loss is lam * CE(X_mixed, y_a) + (1 - lam) * CE(X_mixed, y_b).
    """
    if alpha <= 0:
        raise ParameterError(f"mixup alpha must be positive, got {alpha}")
    lam = float(rng.beta(alpha, alpha))
    perm = rng.permutation(X.shape[0])
    X_mixed = lam * X + (1.0 - lam) * X[perm]
    return X_mixed, y, y[perm], lam


def rat_loss(model, X, y, config: TrainConfig, rng: np.random.Generator | None = None):
    """Batch loss for any objective; returns (loss tensor, clean predictions).

    For the perturbation objectives the loss is mean CE on the clean batch
    plus mean CE on the perturbed batch, with the perturbed inputs treated as
    fixed data (gradients flow through the parameters only).  Mixup, when
    enabled, replaces the clean term; the perturbation branch keeps the hard
    labels it needs, unless ``mixup_on_rat`` opts the perturbed term into the
    same mixed pairing.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.int64))
    clean_preds = None

    mix = config.mixup_alpha is not None and rng is not None

    def ce_term(inputs, labels_a, labels_b=None, lam=1.0):
        z = model.forward_tensor(T.Tensor(inputs))
        term = T.mean(T.cross_entropy(z, labels_a, config.temperature))
        if labels_b is not None:
            term = lam * term + (1.0 - lam) * T.mean(
                T.cross_entropy(z, labels_b, config.temperature)
            )
        return z, term

    if mix:
        X_mixed, y_a, y_b, lam = mixup_batch(X, y, config.mixup_alpha, rng)
        z_clean, loss = ce_term(X_mixed, y_a, y_b, lam)
        clean_preds = model.predict_batch(X)
    else:
        z_clean, loss = ce_term(X, y)
        clean_preds = np.argmax(z_clean.data, axis=1)

    if config.objective != "standard":
        if mix and config.mixup_on_rat:
            hard = np.where(lam >= 0.5, y_a, y_b)
            X_adv = perturb_for_objective(
                model, X_mixed, hard, config.objective, config.epsilon, config.temperature
            )
            _, adv = ce_term(X_adv, y_a, y_b, lam)
        else:
            X_adv = perturb_for_objective(
                model, X, y, config.objective, config.epsilon, config.temperature
            )
            _, adv = ce_term(X_adv, y)
        loss = loss + adv

    return loss, clean_preds


def train(model, dataset, config: TrainConfig):
    """SGD training loop; mutates the model and returns it with its TrainLog.

    Deterministic under a fixed config seed: per-epoch shuffles and mixup
    draws come from derived substreams, and the update order is serial.
    Raises :class:`TrainingError` naming the epoch and step if the loss stops
    being finite.
    """
    X_all = dataset.inputs
    y_all = dataset.labels
    n = len(dataset)
    if n == 0:
        raise ParameterError("cannot train on an empty dataset")

    velocity = [np.zeros_like(p.data) for p in model.parameters()]
    log = TrainLog()

    for epoch in range(config.epochs):
        lr = lr_at_epoch(config, epoch)
        order = rng_for(config.seed, "train.shuffle", epoch).permutation(n)
        mix_rng = rng_for(config.seed, "train.mixup", epoch)
        epoch_loss = 0.0
        epoch_hits = 0
        for step, start in enumerate(range(0, n, config.batch_size)):
            batch = order[start : start + config.batch_size]
            loss, clean_preds = rat_loss(model, X_all[batch], y_all[batch], config, mix_rng)
            if not np.isfinite(loss.data):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, step {step}: {loss.data!r}"
                )
            model.zero_grad()
            T.backward(loss)
            model.note_backward(len(batch))
            for p, v in zip(model.parameters(), velocity):
                v *= config.momentum
                v += p.grad
                p.data = p.data - lr * v
            model.zero_grad()
            epoch_loss += float(loss.data) * len(batch)
            epoch_hits += int((clean_preds == y_all[batch]).sum())
        for p in model.parameters():
            if not np.isfinite(p.data).all():
                raise TrainingError(f"non-finite parameters after epoch {epoch}")
        log.epochs.append((epoch_loss / n, epoch_hits / n, lr))

    log.final_checksum = model.checksum()
    return model, log
