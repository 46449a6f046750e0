"""Datasets: synthesis, IDX/CSV loading, splits, and corruption.

All generators and loaders are deterministic under a fixed seed.  Datasets
are immutable after construction and safe to share across workers.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

from .exceptions import FormatError, ParameterError
from .seeding import rng_for

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

CORRUPTION_KINDS = ("gaussian_noise", "uniform_noise", "blur_1d")


@dataclass(frozen=True)
class Dataset:
    """n examples of d features with integer class labels.

    ``input_range`` is the (low, high) bound all features live in; perturbation
    caps and corruption clipping are expressed against its width.
    """

    inputs: np.ndarray
    labels: np.ndarray
    name: str
    input_range: tuple[float, float]

    def __post_init__(self):
        if self.inputs.ndim != 2 or self.labels.shape != (self.inputs.shape[0],):
            raise ParameterError(
                f"inputs {self.inputs.shape} and labels {self.labels.shape} disagree"
            )
        if not np.isfinite(self.inputs).all():
            raise ParameterError("dataset inputs contain non-finite values")
        if len(self.labels) and self.labels.min() < 0:
            raise ParameterError("labels must be non-negative class indices")

    def __len__(self) -> int:
        return self.inputs.shape[0]

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]

    @property
    def num_classes(self) -> int:
        return int(self.labels.max()) + 1 if len(self.labels) else 0

    @property
    def range_width(self) -> float:
        return float(self.input_range[1] - self.input_range[0])


@dataclass(frozen=True)
class Split:
    """Disjoint validation/test index sets over an evaluation pool.

    Hyperparameter selection reads ``val_indices`` only; reported metrics read
    ``test_indices`` only.  Regenerating with the same seed reproduces the
    same indices.
    """

    val_indices: np.ndarray
    test_indices: np.ndarray
    seed: int


def make_gaussian_mixture(
    n: int,
    d: int,
    num_classes: int,
    overlap: float,
    seed: int,
    cluster_std: float = 1.0,
    means_seed: int | None = None,
) -> Dataset:
    """Synthetic K-cluster classification data with tunable difficulty.

    Class means are drawn on a sphere of radius ``overlap * cluster_std``, so
    ``overlap`` sets the separation in units of the within-cluster standard
    deviation: large values give a nearly separable problem, small values push
    accuracy toward 1/K.  ``cluster_std`` only rescales the feature space,
    which is how perturbation budgets are put on a chosen absolute scale.
    ``means_seed`` pins the cluster means separately from the sample draw, so
    train and evaluation sets can share one distribution; it defaults to
    ``seed``.
    """
    if num_classes < 2:
        raise ParameterError(f"need at least 2 classes, got {num_classes}")
    if n < num_classes or d < 1:
        raise ParameterError(f"invalid sizes n={n}, d={d} for K={num_classes}")
    if overlap <= 0 or cluster_std <= 0:
        raise ParameterError("overlap and cluster_std must be positive")
    means_rng = rng_for(seed if means_seed is None else means_seed, "data.gaussian.means")
    rng = rng_for(seed, "data.gaussian.samples")
    means = means_rng.normal(size=(num_classes, d))
    means *= (overlap * cluster_std) / np.linalg.norm(means, axis=1, keepdims=True)
    labels = rng.permutation(np.arange(n) % num_classes)
    inputs = means[labels] + rng.normal(0.0, cluster_std, size=(n, d))
    low, high = float(inputs.min()), float(inputs.max())
    return Dataset(inputs, labels.astype(np.int64), f"gaussian-k{num_classes}-d{d}", (low, high))


def load_idx(images_path, labels_path) -> Dataset:
    """Load an IDX image/label pair (big-endian, MNIST layout).

    Pixels are scaled to [0, 1] and flattened to rows*cols features.  Raises
    :class:`FormatError` with the byte offset on a bad magic number, a
    truncated file, or an image/label count mismatch.
    """
    with open(images_path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 16:
        raise FormatError(f"{images_path}: truncated IDX header at offset {len(blob)}")
    magic, n, rows, cols = struct.unpack(">IIII", blob[:16])
    if magic != IDX_IMAGES_MAGIC:
        raise FormatError(f"{images_path}: bad magic 0x{magic:08x} at offset 0")
    expected = 16 + n * rows * cols
    if len(blob) != expected:
        raise FormatError(
            f"{images_path}: expected {expected} bytes, file ends at offset {len(blob)}"
        )
    images = np.frombuffer(blob, dtype=np.uint8, offset=16).reshape(n, rows * cols)

    with open(labels_path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 8:
        raise FormatError(f"{labels_path}: truncated IDX header at offset {len(blob)}")
    magic, n_labels = struct.unpack(">II", blob[:8])
    if magic != IDX_LABELS_MAGIC:
        raise FormatError(f"{labels_path}: bad magic 0x{magic:08x} at offset 0")
    if len(blob) != 8 + n_labels:
        raise FormatError(f"{labels_path}: expected {8 + n_labels} bytes, got {len(blob)}")
    if n_labels != n:
        raise FormatError(f"{labels_path}: {n_labels} labels for {n} images")
    labels = np.frombuffer(blob, dtype=np.uint8, offset=8).astype(np.int64)

    inputs = images.astype(np.float64) / 255.0
    return Dataset(inputs, labels, "idx", (0.0, 1.0))


def load_csv(path) -> Dataset:
    """Load the text dataset format: header ``label,f0,f1,...``, one row each."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("label,"):
            raise FormatError(f"{path}: expected header starting with 'label,'")
        width = len(header.split(",")) - 1
        labels, rows = [], []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != width + 1:
                raise FormatError(f"{path}:{lineno}: expected {width + 1} fields")
            try:
                labels.append(int(parts[0]))
                rows.append([float(v) for v in parts[1:]])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise FormatError(f"{path}: no data rows")
    inputs = np.asarray(rows, dtype=np.float64)
    low, high = float(inputs.min()), float(inputs.max())
    return Dataset(inputs, np.asarray(labels, dtype=np.int64), os.path.basename(path), (low, high))


def save_csv(dataset: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("label," + ",".join(f"f{i}" for i in range(dataset.dim)) + "\n")
        for label, row in zip(dataset.labels, dataset.inputs):
            fh.write(str(int(label)) + "," + ",".join(repr(float(v)) for v in row) + "\n")


def split_val_test(dataset: Dataset, val_fraction: float = 0.2, seed: int = 0) -> Split:
    """Partition the evaluation pool into val/test index sets.

    |val| = round(val_fraction * n) with half-up rounding; the two sets are
    disjoint and together cover the pool.
    """
    n = len(dataset)
    if n == 0:
        raise ParameterError("cannot split an empty dataset")
    if not 0.0 < val_fraction < 1.0:
        raise ParameterError(f"val_fraction must be in (0, 1), got {val_fraction}")
    n_val = int(np.floor(val_fraction * n + 0.5))
    perm = rng_for(seed, "data.split").permutation(n)
    val = np.sort(perm[:n_val])
    test = np.sort(perm[n_val:])
    return Split(val_indices=val, test_indices=test, seed=seed)


def corrupt(dataset: Dataset, kind: str, severity: int, seed: int = 0) -> Dataset:
    """Corrupted copy of a dataset, clipped back into its input range.

    Severity runs 1..5 with distortion energy monotone in severity; severity 0
    is the identity.  ``blur_1d`` treats each example as a 1-d signal along
    the feature axis and applies a box filter of width 2*severity + 1.
    """
    if kind not in CORRUPTION_KINDS:
        raise ParameterError(f"unknown corruption kind {kind!r}; choose from {CORRUPTION_KINDS}")
    if not 0 <= severity <= 5:
        raise ParameterError(f"severity must be in 0..5, got {severity}")
    if severity == 0:
        return Dataset(dataset.inputs.copy(), dataset.labels.copy(), dataset.name, dataset.input_range)

    rng = rng_for(seed, "data.corrupt", kind, severity)
    width = dataset.range_width or 1.0
    x = dataset.inputs
    if kind == "gaussian_noise":
        out = x + rng.normal(0.0, 0.03 * severity * width, size=x.shape)
    elif kind == "uniform_noise":
        amp = 0.05 * severity * width
        out = x + rng.uniform(-amp, amp, size=x.shape)
    else:  # blur_1d
        k = 2 * severity + 1
        pad = k // 2
        padded = np.pad(x, ((0, 0), (pad, pad)), mode="edge")
        kernel = np.ones(k) / k
        out = np.apply_along_axis(lambda r: np.convolve(r, kernel, mode="valid"), 1, padded)
    out = np.clip(out, dataset.input_range[0], dataset.input_range[1])
    name = f"{dataset.name}+{kind}{severity}"
    return Dataset(out, dataset.labels.copy(), name, dataset.input_range)
