"""Small input-validation helpers used across the engine."""
from __future__ import annotations

import numpy as np

from .errors import DataFormatError


def as_float_matrix(X, name: str = "X") -> np.ndarray:
    """Coerce to a 2-D float64 array, rejecting non-finite entries."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] == 0:
        raise ValueError(f"{name} must be a 2-D array of vectors")
    if not np.isfinite(X).all():
        raise ValueError(f"{name} contains non-finite values")
    return X


def normalize_rows(X: np.ndarray) -> np.ndarray:
    """L2-normalize each row. A zero-norm row is a data error."""
    X = np.asarray(X, dtype=np.float64)
    norms = np.linalg.norm(X, axis=-1, keepdims=True)
    if np.any(norms < 1e-12):
        raise DataFormatError("zero-norm embedding")
    return X / norms


def check_unit_rows(X: np.ndarray, tol: float = 1e-6) -> None:
    norms = np.linalg.norm(X, axis=-1)
    if np.any(np.abs(norms - 1.0) > tol):
        raise ValueError("rows are not unit-norm")


def rng_for(seed: int, *keys: int) -> np.random.Generator:
    """Derive a generator from a base seed and integer context keys.

    Keeps every stochastic stage independently re-seedable so that resumed
    runs replay identical draws without serializing generator state.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), *[int(k) for k in keys]]))
