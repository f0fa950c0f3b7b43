"""Input validation helpers shared across the package.

These mirror the role of ``sklearn.utils.validation``: coerce array-likes
to well-typed numpy arrays and fail early with informative errors.
"""

import numpy as np

from .errors import (
    DimensionMismatchError,
    NonFiniteError,
    ValidationError,
)


def as_float_vector(values, name="values"):
    """Coerce a 1-D array-like of finite reals to a float64 vector."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise DimensionMismatchError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains NaN or infinite entries")
    return arr


def as_float_matrix(values, name="values"):
    """Coerce a 2-D array-like of finite reals to a float64 matrix."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 2:
        raise DimensionMismatchError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains NaN or infinite entries")
    return arr


def check_positive(value, name):
    """Require a strictly positive finite scalar (tolerances, counts)."""
    if not np.isfinite(value) or value <= 0:
        raise ValidationError(f"{name} must be finite and > 0, got {value!r}")
    return float(value)


def check_class_index(k, n_classes, name="k"):
    """Require an integer class index in 0..n_classes-1."""
    k = int(k)
    if not 0 <= k < n_classes:
        from .errors import ClassIndexError

        raise ClassIndexError(f"{name}={k} outside 0..{n_classes - 1}")
    return k


def frozen(arr):
    """Return a read-only copy, for immutable container types."""
    out = np.array(arr, dtype=float, copy=True)
    out.setflags(write=False)
    return out
