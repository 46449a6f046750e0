"""Robust-radius estimation.

The robust radius of an input is the smallest L-inf perturbation that changes
the model's predicted class.  Two estimators are provided, plus a brute-force
oracle used to validate them:

* :func:`rr_bs` fixes the signed-gradient attack direction with one backward
  pass, grows the budget by doubling until the prediction flips, then binary
  searches the flip boundary under a fixed total forward-pass budget.
* :func:`rr_fast` linearizes the logits along the same direction with a single
  finite-difference probe and solves the earliest class-crossing time in
  closed form: two forward passes and one backward pass, always.
* :func:`oracle_line_search` scans a dense radius grid along a given
  direction, with optional refinement of the bracketing cell.

Estimates never consult the true label; they measure the stability of the
prediction itself.  When no perturbation up to the cap flips the prediction,
the estimate carries the no-flip sentinel ``inf`` (maximal confidence).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .attacks import AttackConfig, fgsm_direction, pgd
from .exceptions import ParameterError

NO_FLIP = math.inf

DENOM_FLOOR = 1e-12


@dataclass
class RadiusConfig:
    """Knobs shared by the radius estimators.

    ``max_total_passes`` is the total forward-pass budget of the boundary
    search (the initial pass plus every probe).  ``alpha`` is the
    finite-difference step of the fast estimator.  ``r_cap`` is the give-up
    radius; None resolves to 2x the width of the dataset's input range.
    """

    r_init: float = 1e-4
    max_total_passes: int = 25
    alpha: float = 0.01
    temperature: float = 1.0
    r_cap: float | None = None
    base_attack: str = "fgsm"
    pgd_steps: int = 4

    def __post_init__(self):
        if self.r_init <= 0:
            raise ParameterError(f"r_init must be positive, got {self.r_init}")
        if self.alpha <= 0:
            raise ParameterError(f"alpha must be positive, got {self.alpha}")
        if self.r_cap is not None and self.r_cap <= self.r_init:
            raise ParameterError("r_cap must exceed r_init")
        if self.base_attack not in ("fgsm", "pgd"):
            raise ParameterError(f"base_attack must be 'fgsm' or 'pgd', got {self.base_attack!r}")
        if self.max_total_passes < 2:
            raise ParameterError("max_total_passes must be at least 2")

    def resolved_cap(self, dataset=None) -> float:
        if self.r_cap is not None:
            return self.r_cap
        if dataset is not None:
            return 2.0 * dataset.range_width
        return 2.0


@dataclass
class RadiusEstimate:
    """One radius measurement with its provenance and cost.

    ``value`` is the estimated L-inf radius, or ``inf`` when nothing flipped.
    For bracketing methods, ``bracket`` is the final (r_min, r_max) with the
    prediction verified unchanged at r_min (``low_unchanged``) and changed at
    r_max (``high_flipped``); the value lies inside the bracket.  Pass counts
    are exact instrumented tallies for this estimate.
    """

    value: float
    method: str
    forward_passes: int
    backward_passes: int
    flipped: bool
    bracket: tuple[float, float] | None = None
    low_unchanged: bool = False
    high_flipped: bool = False

    @property
    def bracket_width(self) -> float:
        return self.bracket[1] - self.bracket[0] if self.bracket else math.nan


def solve_crossing(h0, hprime, y_hat: int) -> float:
    """Earliest positive time at which a linearized logit overtakes the top one.

    Class i's trajectory h0[i] + t * hprime[i] crosses the predicted class at
    t_i = (h0[y_hat] - h0[i]) / (hprime[i] - hprime[y_hat]).  Candidates need
    t_i > 0 and a denominator above a magnitude floor (near-parallel
    trajectories would otherwise overflow); the result is the minimum over
    classes, or the no-flip sentinel when no trajectory ever crosses.
    """
    h0 = np.asarray(h0, dtype=np.float64)
    hprime = np.asarray(hprime, dtype=np.float64)
    best = NO_FLIP
    for i in range(h0.shape[0]):
        if i == y_hat:
            continue
        denom = hprime[i] - hprime[y_hat]
        if abs(denom) <= DENOM_FLOOR:
            continue
        t = (h0[y_hat] - h0[i]) / denom
        if t > 0 and t < best:
            best = t
    return best


def rr_fast(model, x, config: RadiusConfig) -> RadiusEstimate:
    """Closed-form radius estimate from a one-point linearization.

    One backward pass picks the signed-gradient direction d at the predicted
    label; the logit slopes along d come from a finite difference between the
    already-computed logits at x and one probe at x + alpha * d.  Cost is
    exactly 2 forward passes and 1 backward pass.
    """
    x = np.asarray(x, dtype=np.float64)
    with model.counting() as pc:
        z0, yhat_arr, grad = model.ce_input_grad(x[None, :], None, config.temperature)
        y_hat = int(yhat_arr[0])
        d = np.sign(grad[0])
        if not d.any():
            return RadiusEstimate(NO_FLIP, "rr_fast", pc.forwards, pc.backwards, False)
        z_alpha = model.logits(x + config.alpha * d)
        hprime = (z_alpha - z0[0]) / config.alpha
        t_star = solve_crossing(z0[0], hprime, y_hat)
        value = float(t_star * np.abs(d).max())
    return RadiusEstimate(value, "rr_fast", pc.forwards, pc.backwards, math.isfinite(value))


def rr_bs(model, x, config: RadiusConfig, r_cap: float | None = None) -> RadiusEstimate:
    """Boundary search: attack at a budget, double until it flips, then bisect.

    The bracket starts at (0, r_init); radius 0 trivially keeps the
    prediction, so the invariant "unchanged at r_min, changed at r_max" holds
    from the first flip onward.  With the FGSM base the attack direction is
    computed once (1 backward pass) and every probe is a single forward, so
    after L_upper doubling probes the binary search runs
    max_total_passes - L_upper - 1 iterations and the total forward count is
    exactly the budget.  No flip before the cap returns the sentinel.
    """
    x = np.asarray(x, dtype=np.float64)
    cap = r_cap if r_cap is not None else config.resolved_cap()
    method = f"rr_bs_{config.base_attack}"

    with model.counting() as pc:
        if config.base_attack == "fgsm":
            z0, yhat_arr, grad = model.ce_input_grad(x[None, :], None, config.temperature)
            y_hat = int(yhat_arr[0])
            d = np.sign(grad[0])
            if not d.any():
                return RadiusEstimate(NO_FLIP, method, pc.forwards, pc.backwards, False)

            def probe(r: float) -> bool:
                return model.predict(x + r * d) != y_hat

            probe_cost = 1
        else:
            y_hat = model.predict(x)

            def probe(r: float) -> bool:
                cfg = AttackConfig(epsilon=r, steps=config.pgd_steps)
                return model.predict(pgd(model, x, y_hat, cfg, config.temperature)) != y_hat

            probe_cost = config.pgd_steps + 1

        budget = config.max_total_passes

        def remaining() -> int:
            return budget - pc.forwards

        # Doubling phase: grow r_max until the attack flips the prediction.
        r_min, r_max = 0.0, min(config.r_init, cap)
        flipped = False
        while remaining() >= probe_cost:
            flipped = probe(r_max)
            if flipped:
                break
            if r_max >= cap:
                return RadiusEstimate(
                    NO_FLIP, method, pc.forwards, pc.backwards, False,
                    low_unchanged=True,
                )
            r_min = r_max
            r_max = min(2.0 * r_max, cap)
        if not flipped:
            return RadiusEstimate(NO_FLIP, method, pc.forwards, pc.backwards, False)

        # Binary search inside the verified bracket.
        while remaining() >= probe_cost:
            mid = 0.5 * (r_min + r_max)
            if probe(mid):
                r_max = mid
            else:
                r_min = mid

        value = 0.5 * (r_min + r_max)
    return RadiusEstimate(
        value,
        method,
        pc.forwards,
        pc.backwards,
        True,
        bracket=(r_min, r_max),
        low_unchanged=True,
        high_flipped=True,
    )


def oracle_line_search(
    model, x, direction, r_cap: float, grid_points: int, refine: int = 0
) -> RadiusEstimate:
    """Dense scan for the first prediction flip along a fixed direction.

    Evaluates predictions at ``grid_points`` radii spanning [0, r_cap] and
    returns the first radius whose prediction differs, bracketed to one grid
    cell.  Each refinement pass re-grids the bracketing cell with the same
    number of points, shrinking the bracket by ~grid_points per pass.
    """
    if grid_points < 2:
        raise ParameterError(f"grid_points must be >= 2, got {grid_points}")
    x = np.asarray(x, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)

    with model.counting() as pc:
        base = model.predict(x)

        def first_flip(lo: float, hi: float):
            radii = np.linspace(lo, hi, grid_points)
            preds = model.predict_batch(x[None, :] + radii[:, None] * d[None, :])
            hits = np.nonzero(preds != base)[0]
            return radii, (int(hits[0]) if hits.size else None)

        lo, hi = 0.0, r_cap
        radii, idx = first_flip(lo, hi)
        if idx is None:
            return RadiusEstimate(
                NO_FLIP, "oracle_line_search", pc.forwards, pc.backwards, False,
                low_unchanged=True,
            )
        lo, hi = (radii[idx - 1], radii[idx]) if idx > 0 else (0.0, radii[idx])
        for _ in range(refine):
            radii, idx = first_flip(lo, hi)
            if idx is None or idx == 0:
                break
            lo, hi = radii[idx - 1], radii[idx]
        lo, hi = float(lo), float(hi)
    return RadiusEstimate(
        hi,
        "oracle_line_search",
        pc.forwards,
        pc.backwards,
        True,
        bracket=(lo, hi),
        low_unchanged=True,
        high_flipped=True,
    )


def radius_batch(model, dataset, config: RadiusConfig, method: str) -> list[RadiusEstimate]:
    """Per-example estimates over a dataset, order preserving.

    Identical to calling the single-input estimator row by row; no-flip
    sentinels pass through without aborting the batch.  ``method`` is one of
    ``rr_bs``, ``rr_fast``, ``oracle_line_search``.
    """
    cap = config.resolved_cap(dataset)
    out = []
    for row in dataset.inputs:
        if method == "rr_bs":
            out.append(rr_bs(model, row, config, r_cap=cap))
        elif method == "rr_fast":
            out.append(rr_fast(model, row, config))
        elif method == "oracle_line_search":
            with model.counting() as pc:
                d = fgsm_direction(model, row, config.temperature)
                est = oracle_line_search(model, row, d, cap, grid_points=10_000, refine=2)
            out.append(
                RadiusEstimate(
                    est.value, est.method, pc.forwards, pc.backwards, est.flipped,
                    bracket=est.bracket, low_unchanged=est.low_unchanged,
                    high_flipped=est.high_flipped,
                )
            )
        else:
            raise ParameterError(f"unknown radius method {method!r}")
    return out


def write_radius_csv(estimates: list[RadiusEstimate], path) -> None:
    """Dump per-example estimates: index,method,radius,forward_passes,backward_passes,flipped."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("index,method,radius,forward_passes,backward_passes,flipped\n")
        for i, est in enumerate(estimates):
            fh.write(
                f"{i},{est.method},{repr(float(est.value))},{est.forward_passes},"
                f"{est.backward_passes},{int(est.flipped)}\n"
            )
