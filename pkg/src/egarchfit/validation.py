"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np

from .errors import NonFiniteValueError


def as_float_array(x, name: str = "x") -> np.ndarray:
    """Coerce to a contiguous 1-D float64 array, rejecting non-finite entries.

    Accepts any 1-D array-like, or a 2-D column of shape (n, 1) so the
    estimator API composes with sklearn-style inputs.
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise NonFiniteValueError(f"{name} contains a non-finite value at index {bad}")
    return np.ascontiguousarray(arr)


def check_finite_scalar(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


def check_positive(value: float, name: str) -> float:
    value = check_finite_scalar(value, name)
    if value <= 0:
        raise ValueError(f"{name} must be > 0, got {value!r}")
    return value


def check_count(value: int, name: str, minimum: int = 0) -> int:
    ivalue = int(value)
    if ivalue != value or ivalue < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return ivalue
