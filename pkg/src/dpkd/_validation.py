"""Input validation helpers shared by the estimators and the functional API."""

import math
import numbers

import numpy as np
from sklearn.utils import check_array


class DataError(ValueError):
    """Raised when input data violates a structural requirement."""


def check_points(X, *, name="data", min_samples=1):
    """Return ``X`` as a finite float64 array of shape (n, d).

    A 1-d input is read as n points in one dimension.
    """
    try:
        arr = np.asarray(X, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise DataError(f"{name}: non-numeric input") from exc
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.shape[0] == 0:
        raise DataError("empty input")
    try:
        arr = check_array(
            arr,
            dtype=np.float64,
            ensure_2d=True,
            ensure_all_finite=True,
            ensure_min_samples=min_samples,
        )
    except ValueError as exc:
        raise DataError(f"{name}: {exc}") from exc
    return arr


def check_positive(value, name, *, allow_inf=False):
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise TypeError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if math.isnan(value) or value <= 0 or (math.isinf(value) and not allow_inf):
        raise ValueError(f"{name} must be positive and finite, got {value}")
    return value


def check_nonnegative(value, name, *, allow_inf=False):
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise TypeError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if math.isnan(value) or value < 0 or (math.isinf(value) and not allow_inf):
        raise ValueError(f"{name} must be nonnegative, got {value}")
    return value


def check_probability(value, name, *, open_interval=False):
    value = float(value)
    if open_interval:
        if not 0.0 < value < 1.0:
            raise ValueError(f"{name} must lie in (0, 1), got {value}")
    elif not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value
