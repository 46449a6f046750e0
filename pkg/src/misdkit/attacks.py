"""Gradient-sign perturbations: FGSM, PGD, and the signed search direction.

These are pure functions over a read-only model.  The L-inf bound
max|x' - x| <= epsilon holds exactly for every attack.  sign(0) is 0, so
coordinates with a dead gradient are never perturbed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ParameterError


@dataclass
class AttackConfig:
    """Budget and iteration schedule for signed-gradient attacks.

    ``steps == 1`` is single-step FGSM.  ``step_size`` defaults to
    epsilon / 4 for multi-step runs; there is no random start, so attacks are
    deterministic.  ``clamp_to_range`` additionally clips iterates into
    ``clip_range`` (off by default: small budgets never leave the data range,
    and the unclipped arithmetic is what the radius search assumes).
    """

    epsilon: float = 0.001
    steps: int = 1
    step_size: float | None = None
    clamp_to_range: bool = False
    clip_range: tuple[float, float] | None = None

    def __post_init__(self):
        if self.epsilon < 0:
            raise ParameterError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.steps < 1:
            raise ParameterError(f"steps must be >= 1, got {self.steps}")
        if self.steps > 1 and self.step_size is not None and self.step_size <= 0:
            raise ParameterError("step_size must be positive for multi-step attacks")

    def resolved_step(self) -> float:
        if self.step_size is not None:
            return self.step_size
        return self.epsilon if self.steps == 1 else self.epsilon / 4.0


def _maybe_clip(x: np.ndarray, config: AttackConfig | None) -> np.ndarray:
    if config is not None and config.clamp_to_range and config.clip_range is not None:
        return np.clip(x, config.clip_range[0], config.clip_range[1])
    return x


def fgsm(
    model,
    x,
    target_label,
    epsilon: float,
    temperature: float = 1.0,
    direction: str = "ascent",
    config: AttackConfig | None = None,
) -> np.ndarray:
    """Single signed-gradient step on CE(x, target_label).

    ``ascent`` moves toward higher loss (x + eps * sign(grad)), ``descent``
    toward lower.  Accepts a single vector or an (n, d) batch with per-row
    target labels; one forward and one backward pass per example.
    """
    if direction not in ("ascent", "descent"):
        raise ParameterError(f"direction must be 'ascent' or 'descent', got {direction!r}")
    if epsilon < 0:
        raise ParameterError(f"epsilon must be >= 0, got {epsilon}")
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    targets = np.atleast_1d(np.asarray(target_label, dtype=np.int64))
    if targets.shape == (1,) and X.shape[0] > 1:
        targets = np.full(X.shape[0], targets[0])
    _, _, grad = model.ce_input_grad(X, targets, temperature)
    sign = 1.0 if direction == "ascent" else -1.0
    out = _maybe_clip(X + sign * epsilon * np.sign(grad), config)
    return out[0] if single else out


def pgd(model, x, target_label, config: AttackConfig, temperature: float = 1.0) -> np.ndarray:
    """Iterated signed ascent steps, each projected into the L-inf ball.

    With steps == 1 and step_size == epsilon this is bitwise-equal to
    :func:`fgsm` ascent.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X0 = np.atleast_2d(x)
    targets = np.atleast_1d(np.asarray(target_label, dtype=np.int64))
    if targets.shape == (1,) and X0.shape[0] > 1:
        targets = np.full(X0.shape[0], targets[0])
    step = config.resolved_step()
    X = X0
    for _ in range(config.steps):
        _, _, grad = model.ce_input_grad(X, targets, temperature)
        X = X + step * np.sign(grad)
        X = np.clip(X, X0 - config.epsilon, X0 + config.epsilon)
        X = _maybe_clip(X, config)
    return X[0] if single else X


def fgsm_direction(model, x, temperature: float = 1.0) -> np.ndarray:
    """Signed gradient of CE at the *predicted* label: entries in {-1, 0, +1}.

    This is the fixed search direction the radius estimators perturb along;
    it never consults the ground-truth label.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    _, _, grad = model.ce_input_grad(X, None, temperature)
    d = np.sign(grad)
    return d[0] if single else d
