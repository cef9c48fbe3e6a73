"""Input validation helpers shared by the estimators and functional API."""

from __future__ import annotations

import numpy as np

from .exceptions import DimMismatch


def check_vector(v, name: str = "vector") -> np.ndarray:
    """Return ``v`` as a finite 1-D float64 array."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite components")
    return arr


def check_matrix(X, name: str = "X", min_rows: int = 0) -> np.ndarray:
    """Return ``X`` as a finite 2-D float64 array with at least ``min_rows`` rows."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1 and arr.size == 0:
        arr = arr.reshape(0, 0)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < min_rows:
        raise ValueError(f"{name} needs at least {min_rows} rows, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_binary_labels(y, n: int | None = None) -> np.ndarray:
    """Return ``y`` as an int64 array of 0/1 labels, optionally of length ``n``."""
    arr = np.asarray(y)
    if arr.ndim != 1:
        raise ValueError(f"labels must be 1-D, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"expected {n} labels, got {arr.shape[0]}")
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise ValueError("labels must be 0 or 1")
    return arr.astype(np.int64)


def check_same_dim(u: np.ndarray, v: np.ndarray) -> None:
    if u.shape[-1] != v.shape[-1]:
        raise DimMismatch(f"dimension mismatch: {u.shape[-1]} != {v.shape[-1]}")
