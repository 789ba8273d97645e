"""Kernel PCA on sphere-valued training points and the preimage objective.

For a query ``w`` the rank-``m`` preimage maximises over the unit sphere

    f(v) = sum_k beta_k sum_j v_kj R(v - t_j),   beta_k = sum_j v_kj R(w - t_j),

where ``v_k`` are unit eigenvectors of the kernel matrix. The double sum is
collapsed to ``f(v) = sum_j c_j R(v - t_j)`` with ``c = V_m beta``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from ._validation import (
    UNIT_NORM_TOL,
    as_points,
    as_vector,
    check_count,
    check_unit_rows,
)
from .kernels import (
    EigenPairs,
    KernelSpec,
    build_kernel_matrix,
    eigendecompose,
    kernel_gradient,
)


def _fingerprint(spec, points):
    h = hashlib.sha256()
    h.update(f"{spec.family}:{spec.gamma!r}:{points.shape}".encode())
    h.update(np.ascontiguousarray(points).tobytes())
    return h.hexdigest()


@dataclass(frozen=True)
class KpcaModel:
    """A fitted kernel PCA: training points, all eigenpairs, and the rank ``m``.

    ``weight_by_eigenvalues`` switches the preimage objective to the
    eigenvalue-weighted projection ``sum_k lambda_k <phi_k, .> phi_k``; the
    default uses the unweighted form.
    """

    spec: KernelSpec
    training_points: np.ndarray = field(repr=False)
    eigenpairs: EigenPairs = field(repr=False)
    m: int
    weight_by_eigenvalues: bool = False
    fingerprint: str = field(default="", repr=False)

    def __post_init__(self):
        n = self.training_points.shape[0]
        if not 1 <= self.m <= n:
            raise ValueError(f"m must satisfy 1 <= m <= n={n}, got {self.m}")
        if self.eigenpairs.eigenvectors.shape != (n, n):
            raise ValueError("eigenpairs do not match the training points")

    @property
    def n(self) -> int:
        return self.training_points.shape[0]

    @property
    def components(self) -> np.ndarray:
        """Leading ``m`` eigenvectors as columns, shape (n, m)."""
        return self.eigenpairs.eigenvectors[:, : self.m]

    def verify(self) -> bool:
        """Check the stored fingerprint against the training points and kernel."""
        return self.fingerprint == _fingerprint(self.spec, self.training_points)

    def with_rank(self, m) -> KpcaModel:
        return KpcaModel(
            self.spec, self.training_points, self.eigenpairs, check_count(m, "m"),
            self.weight_by_eigenvalues, self.fingerprint,
        )


def fit_kpca(spec: KernelSpec, angles, m: int, *, weight_by_eigenvalues=False) -> KpcaModel:
    """Eigendecompose the kernel matrix of ``angles`` and keep rank ``m``."""
    T = as_points(angles, name="angles")
    m = check_count(m, "m")
    if m > T.shape[0]:
        raise ValueError(f"m={m} exceeds the number of training points {T.shape[0]}")
    T = T.copy()
    T.setflags(write=False)
    pairs = eigendecompose(build_kernel_matrix(spec, T))
    return KpcaModel(spec, T, pairs, m, bool(weight_by_eigenvalues), _fingerprint(spec, T))


@dataclass(frozen=True)
class PreimageObjective:
    """``f(v) = sum_j c_j R(v - t_j)`` for one query ``w``."""

    model: KpcaModel = field(repr=False)
    query: np.ndarray
    coefficients: np.ndarray = field(repr=False)
    projections: np.ndarray = field(repr=False)

    @property
    def spec(self) -> KernelSpec:
        return self.model.spec

    @property
    def points(self) -> np.ndarray:
        return self.model.training_points


def objective_coefficients(model: KpcaModel, w) -> PreimageObjective:
    """Collapse the rank-``m`` projection of ``phi(w)`` into one coefficient vector.

    ``projections`` holds ``beta_k = sum_i v_ki R(w - t_i)`` and
    ``coefficients`` holds ``c_j = sum_k beta_k v_kj`` (times ``lambda_k``
    when the model weights by eigenvalues).
    """
    w = as_vector(w, name="w")
    check_unit_rows(w, tol=UNIT_NORM_TOL, name="w")
    if w.shape[0] != model.training_points.shape[1]:
        raise ValueError("query dimension does not match the training points")
    r = model.spec(w - model.training_points)
    V = model.components
    beta = V.T @ r
    weights = beta * model.eigenpairs.eigenvalues[: model.m] if model.weight_by_eigenvalues else beta
    return PreimageObjective(model, w, V @ weights, beta)


def objective_value(obj: PreimageObjective, v):
    """``f(v)``; ``v`` may be a single point or a stack of shape (k, d)."""
    v = np.asarray(v, dtype=np.float64)
    diff = v[..., None, :] - obj.points
    return obj.spec(diff) @ obj.coefficients


def objective_gradient(obj: PreimageObjective, v):
    """Euclidean gradient of ``f`` at ``v`` (defined on all of R^d)."""
    v = np.asarray(v, dtype=np.float64)
    g = kernel_gradient(obj.spec, v - obj.points)
    return obj.coefficients @ g



def objective_increment(obj: PreimageObjective, v, v_new) -> float:
    """``f(v_new) - f(v)`` for two directions, free of cancellation.

    Both arguments are read as points of the sphere (only their directions
    matter). Kernel values are rewritten through cosines ``<v, t_j>`` and the
    change of each cosine is formed from ``v_new - v`` directly, so that steps
    far below the rounding level of ``f`` itself are still ranked correctly.
    """
    v = np.asarray(v, dtype=np.float64)
    v_new = np.asarray(v_new, dtype=np.float64)
    T = obj.points
    t_norm = np.linalg.norm(T, axis=1)
    delta = v_new - v
    nv, nw = np.linalg.norm(v), np.linalg.norm(v_new)
    vt = T @ v
    # cos(v_new) - cos(v) with 1/|v_new| - 1/|v| expanded through (v_new - v)
    dcos = ((T @ delta) / nw - vt * (delta @ (v + v_new)) / (nv * nw * (nv + nw))) / t_norm
    chord = np.linalg.norm(v / nv - T / t_norm[:, None], axis=1)
    base = obj.spec.from_sqdist(chord**2)
    if obj.spec.family == "gaussian":
        change = np.expm1(2.0 * obj.spec.gamma * dcos)
    else:
        chord_new = np.sqrt(np.maximum(chord**2 - 2.0 * dcos, 0.0))
        total = chord + chord_new
        with np.errstate(invalid="ignore", divide="ignore"):
            dchord = np.where(total > 0, -2.0 * dcos / total, 0.0)
        change = np.expm1(-obj.spec.gamma * dchord)
    return float(obj.coefficients @ (base * change))
