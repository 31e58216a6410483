"""Small input-validation helpers used by the public entry points."""

from __future__ import annotations

import numpy as np

from .errors import DataFormatError, NumericalError


def as_float_array(values, name: str, *, ndim: int | None = None) -> np.ndarray:
    """Coerce to a float64 ndarray, optionally enforcing dimensionality."""
    arr = np.asarray(values, dtype=np.float64)
    if ndim is not None and arr.ndim != ndim:
        raise DataFormatError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    return arr


def check_finite(arr: np.ndarray, name: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise NumericalError(f"{name} contains non-finite values")
    return arr


def check_length(arr: np.ndarray, n: int, name: str) -> np.ndarray:
    if arr.shape[0] != n:
        raise DataFormatError(f"{name} has length {arr.shape[0]}, expected {n}")
    return arr


def check_positive_int(value, name: str, *, minimum: int = 1) -> int:
    v = int(value)
    if v != value or v < minimum:
        raise DataFormatError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return v


def frozen(arr) -> np.ndarray:
    """Return a read-only float64 copy so shared containers stay immutable."""
    out = np.array(arr, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out
