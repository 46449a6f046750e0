"""Input validation helpers shared by the estimator layer and the CLI."""

from __future__ import annotations

import numpy as np

from .exceptions import DimensionError, ParameterError


def check_matrix(X, name: str = "X") -> np.ndarray:
    """Coerce to a finite 2-d float64 array."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise DimensionError(f"{name} must be 2-d, got shape {X.shape}")
    if X.shape[0] == 0 or X.shape[1] == 0:
        raise ParameterError(f"{name} must be non-empty, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise ParameterError(f"{name} contains non-finite values")
    return X


def check_labels(y, n_rows: int, name: str = "y") -> np.ndarray:
    """Coerce to an integer label vector aligned with the feature rows."""
    y = np.asarray(y)
    if y.ndim != 1 or y.shape[0] != n_rows:
        raise DimensionError(f"{name} must be a vector of length {n_rows}, got shape {y.shape}")
    if not np.issubdtype(y.dtype, np.integer):
        rounded = np.rint(np.asarray(y, dtype=np.float64))
        if not np.array_equal(rounded, np.asarray(y, dtype=np.float64)):
            raise ParameterError(f"{name} must hold integer class labels")
        y = rounded
    return y.astype(np.int64)
