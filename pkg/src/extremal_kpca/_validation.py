"""Input validation helpers shared by the estimators and the functional API."""

from numbers import Integral, Real

import numpy as np
from sklearn.utils.validation import check_array

UNIT_NORM_TOL = 1e-8


def as_points(X, *, name="X", min_samples=1):
    """Return ``X`` as a finite 2-D float array of shape (n, d)."""
    X = check_array(
        X,
        dtype=np.float64,
        ensure_2d=True,
        ensure_min_samples=0,
        input_name=name,
    )
    if X.shape[0] < min_samples:
        raise ValueError("empty sample")
    return X


def as_vector(x, *, name="x"):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"{name} must be a 1-D vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite values")
    return x


def check_unit_rows(X, *, tol=UNIT_NORM_TOL, name="X"):
    """Raise unless every row of ``X`` lies on the unit sphere within ``tol``."""
    norms = np.linalg.norm(np.atleast_2d(X), axis=-1)
    bad = np.abs(norms - 1.0) > tol
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ValueError(
            f"{name} must lie on the unit sphere; row {i} has norm {norms[i]!r}"
        )


def check_positive(value, name, *, allow_zero=False):
    if not isinstance(value, Real) or not np.isfinite(value):
        raise ValueError(f"{name} must be a finite real number, got {value!r}")
    if value < 0 or (value == 0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        raise ValueError(f"{name} must be {bound}, got {value!r}")
    return float(value)


def check_count(value, name, *, minimum=1):
    if isinstance(value, bool) or not isinstance(value, Integral):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value!r}")
    return int(value)
