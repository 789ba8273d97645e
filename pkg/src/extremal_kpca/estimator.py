"""Scikit-learn style estimator wrapping extraction, kernel PCA and preimages."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from .extremes import extract_extremes
from .kernels import KernelSpec
from .kpca import fit_kpca
from .preimage import PgdSettings, batch_preimages
from .stats import scree_components, scree_data


class ExtremalKernelPCA(TransformerMixin, BaseEstimator):
    """Kernel PCA on the angles of the largest observations, with sphere preimages.

    ``fit`` keeps the ``n_extremes`` rows of largest Euclidean norm (or those
    above ``threshold``), maps them to the unit sphere and eigendecomposes
    their kernel matrix. ``transform`` maps each row to its direction and
    returns the rank-``n_components`` preimage of that direction.

    Parameters
    ----------
    n_components : int or "auto", default="auto"
        Retained components; "auto" applies the scree-ratio rule.
    kernel : {"gaussian", "exponential"}, default="gaussian"
    gamma : float, default=1.0
    n_extremes : int or None, default=200
        Number of largest-norm rows used for fitting. ``None`` together with
        ``threshold=None`` uses every row.
    threshold : float or None, default=None
        Radius level; overrides ``n_extremes`` when given.
    weight_by_eigenvalues : bool, default=False
    max_iter, tol, step_rule, step_size
        Passed to :class:`~extremal_kpca.preimage.PgdSettings`.
    n_jobs : int, default=1
        Threads used by ``transform``.

    Attributes
    ----------
    extremes_ : ExtremalSample
    model_ : KpcaModel
    eigenvalues_ : ndarray of shape (n_fit,)
    n_components_ : int
    n_features_in_ : int
    """

    def __init__(
        self,
        n_components="auto",
        *,
        kernel="gaussian",
        gamma=1.0,
        n_extremes=200,
        threshold=None,
        weight_by_eigenvalues=False,
        max_iter=500,
        tol=1e-8,
        step_rule="lipschitz",
        step_size=1.0,
        n_jobs=1,
    ):
        self.n_components = n_components
        self.kernel = kernel
        self.gamma = gamma
        self.n_extremes = n_extremes
        self.threshold = threshold
        self.weight_by_eigenvalues = weight_by_eigenvalues
        self.max_iter = max_iter
        self.tol = tol
        self.step_rule = step_rule
        self.step_size = step_size
        self.n_jobs = n_jobs

    def _settings(self):
        return PgdSettings(self.max_iter, self.tol, self.step_rule, self.step_size)

    def fit(self, X, y=None):
        X = validate_data(self, X, dtype=np.float64)
        spec = KernelSpec(self.kernel, self.gamma)
        self._settings()  # fail early on bad solver parameters
        if self.threshold is not None:
            self.extremes_ = extract_extremes(X, threshold=self.threshold)
        elif self.n_extremes is not None:
            self.extremes_ = extract_extremes(X, top_k=min(self.n_extremes, X.shape[0]))
        else:
            self.extremes_ = extract_extremes(X, top_k=X.shape[0])
        angles = self.extremes_.angles
        full = fit_kpca(spec, angles, 1, weight_by_eigenvalues=self.weight_by_eigenvalues)
        if self.n_components == "auto":
            m = scree_components(full.eigenpairs.eigenvalues)
        elif isinstance(self.n_components, str):
            raise ValueError(f"n_components must be an int or 'auto', got {self.n_components!r}")
        else:
            m = int(self.n_components)
        self.model_ = full.with_rank(m)
        self.n_components_ = self.model_.m
        self.eigenvalues_ = full.eigenpairs.eigenvalues
        return self

    def preimage_results(self, X):
        """Solver output per row; raises ValueError naming the first row that fails."""
        check_is_fitted(self, "model_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        norms = np.linalg.norm(X, axis=1)
        if np.any(norms == 0):
            raise ValueError("zero radius")
        results, errors = batch_preimages(self.model_, X / norms[:, None], self._settings(), n_jobs=self.n_jobs)
        if errors:
            i, exc = errors[0]
            raise ValueError(f"preimage of row {i} failed: {exc}") from exc
        return results

    def transform(self, X):
        """Preimage on the unit sphere of every row's direction, shape (n, d)."""
        return np.vstack([r.preimage for r in self.preimage_results(X)])

    def scree(self, top=20):
        check_is_fitted(self, "model_")
        return scree_data(self.model_.eigenpairs, min(top, self.model_.n))
