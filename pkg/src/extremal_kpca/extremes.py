"""Polar decomposition and extraction of the extremal angular subsample."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import as_points, as_vector, check_count, check_positive


@dataclass(frozen=True)
class ExtremalSample:
    """Angles and radii of the observations whose radius exceeds ``threshold``.

    Attributes
    ----------
    angles : ndarray of shape (N, d)
        ``X_i / |X_i|`` for the selected rows, in order of appearance.
    radii : ndarray of shape (N,)
    threshold : float
        Effective level ``u_n``; every radius is strictly above it.
    source_indices : ndarray of shape (N,)
        Row indices into the original data.
    labels : ndarray of shape (N,) or None
        Optional per-point tags carried over from a generator.
    """

    angles: np.ndarray = field(repr=False)
    radii: np.ndarray = field(repr=False)
    threshold: float
    source_indices: np.ndarray = field(repr=False)
    labels: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        N = len(self.radii)
        if N < 1:
            raise ValueError("no exceedances")
        lengths = {len(self.angles), len(self.source_indices)}
        if self.labels is not None:
            lengths.add(len(self.labels))
        if lengths != {N}:
            raise ValueError("angles, radii, source_indices and labels must have equal length")
        if np.any(np.abs(np.linalg.norm(self.angles, axis=1) - 1.0) > 1e-12):
            raise ValueError("angles must have unit Euclidean norm")
        if np.any(self.radii <= self.threshold):
            raise ValueError("every radius must exceed the threshold")

    def __len__(self):
        return len(self.radii)

    @property
    def dim(self) -> int:
        return self.angles.shape[1]


def polar_decompose(x):
    """Split ``x`` into ``(|x|_2, x / |x|_2)``."""
    x = as_vector(x)
    r = float(np.linalg.norm(x))
    if r == 0.0:
        raise ValueError("zero radius")
    return r, x / r


def _angles(rows, radii):
    if np.any(radii == 0):
        raise ValueError("zero radius")
    ang = rows / radii[:, None]
    # a second normalisation keeps |angle| within an ulp of 1
    return ang / np.linalg.norm(ang, axis=1)[:, None]


def extract_extremes(data, *, top_k=None, threshold=None, labels=None) -> ExtremalSample:
    """Select threshold exceedances and return their angular parts.

    Exactly one of ``top_k`` and ``threshold`` must be given.

    Parameters
    ----------
    data : array-like of shape (n, d)
    top_k : int, optional
        Keep the ``top_k`` rows with the largest Euclidean norm. Radius ties
        go to the lower row index. The recorded threshold is the
        ``(top_k + 1)``-th largest radius, or 0 when ``top_k == n``.
    threshold : float, optional
        Keep every row with norm strictly above ``threshold``.
    labels : array-like of shape (n,), optional
        Per-row tags copied onto the selected rows.

    Returns
    -------
    ExtremalSample
        Selected rows in their original order.
    """
    X = as_points(data, name="data")
    n = X.shape[0]
    if (top_k is None) == (threshold is None):
        raise ValueError("give exactly one of top_k or threshold")
    radii = np.linalg.norm(X, axis=1)
    if top_k is not None:
        k = check_count(top_k, "top_k")
        if k > n:
            raise ValueError(f"top_k={k} exceeds the sample size {n}")
        order = np.lexsort((np.arange(n), -radii))
        u = float(radii[order[k]]) if k < n else 0.0
        if k < n and radii[order[k - 1]] == u:
            raise ValueError(f"radius tie at the top_k={k} boundary")
        idx = np.sort(order[:k])
    else:
        u = check_positive(threshold, "threshold")
        idx = np.flatnonzero(radii > u)
        if idx.size == 0:
            raise ValueError("no exceedances")
    lab = None
    if labels is not None:
        labels = np.asarray(labels)
        if len(labels) != n:
            raise ValueError("labels must have one entry per row")
        lab = labels[idx]
    r = radii[idx]
    return ExtremalSample(_angles(X[idx], r), r, u, idx, lab)
