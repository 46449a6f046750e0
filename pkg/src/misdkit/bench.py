"""Micro-benchmarks: per-example pass counts and relative throughput.

Pass counts are exact instrumented tallies, never sampled.  Wall-clock
throughput is the median over repetitions and is hardware-bound, so only
orderings (and the pass counts themselves) are meaningful assertions.
Benchmarks run single-threaded for stable timings.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from .exceptions import ParameterError
from .instrument import PassCounter
from .radius import RadiusConfig, radius_batch
from .scores import ScoreConfig, confidence_scores

__all__ = ["PassCounter", "BenchmarkRow", "benchmark_methods", "write_benchmark_csv"]

# Pass-count defaults for string method names; eps > 0 turns on the
# preprocessing step for the softmax scores.
_STRING_METHODS = {
    "msr": ScoreConfig(method="msr"),
    "odin": ScoreConfig(method="odin", preprocess_eps=0.001),
    "doctor": ScoreConfig(method="doctor"),
    "rr_bs": ScoreConfig(method="rr_bs"),
    "rr_fast": ScoreConfig(method="rr_fast"),
}


@dataclass(frozen=True)
class BenchmarkRow:
    method: str
    images_per_s: float
    fwd_per_ex: float
    bwd_per_ex: float


def _as_config(method) -> tuple[str, ScoreConfig]:
    if isinstance(method, ScoreConfig):
        return method.method, method
    if method in _STRING_METHODS:
        return method, _STRING_METHODS[method]
    raise ParameterError(f"unknown benchmark method {method!r}")


def benchmark_methods(model, dataset, methods, repetitions: int = 3) -> list[BenchmarkRow]:
    """Score the dataset under each method, timing and counting passes.

    Returns one row per method with median-of-repetitions throughput and the
    exact forward/backward pass counts per example.
    """
    if repetitions < 3:
        raise ParameterError(f"repetitions must be >= 3, got {repetitions}")
    n = len(dataset)
    rows = []
    for method in methods:
        name, score_cfg = _as_config(method)
        if score_cfg.radius_config.r_cap is None and name in ("rr_bs", "rr_fast"):
            import dataclasses

            score_cfg = dataclasses.replace(
                score_cfg,
                radius_config=dataclasses.replace(
                    score_cfg.radius_config, r_cap=RadiusConfig().resolved_cap(dataset)
                ),
            )
        times = []
        counter = None
        for _ in range(repetitions):
            with model.counting() as pc:
                start = time.perf_counter()
                confidence_scores(model, dataset.inputs, score_cfg)
                pc.wall_time = time.perf_counter() - start
            times.append(pc.wall_time)
            counter = pc
        times.sort()
        median = times[len(times) // 2]
        rows.append(
            BenchmarkRow(
                method=name,
                images_per_s=n / median if median > 0 else float("inf"),
                fwd_per_ex=counter.forwards / n,
                bwd_per_ex=counter.backwards / n,
            )
        )
    return rows


def write_benchmark_csv(rows: list[BenchmarkRow], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("method,images_per_s,fwd_per_ex,bwd_per_ex\n")
        for row in rows:
            fh.write(
                f"{row.method},{repr(float(row.images_per_s))},{repr(float(row.fwd_per_ex))},"
                f"{repr(float(row.bwd_per_ex))}\n"
            )
