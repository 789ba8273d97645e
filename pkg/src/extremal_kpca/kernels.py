"""Stationary kernels, Gram matrices and symmetric eigendecompositions.

All kernels here are of the form ``kappa(x, y) = R(x - y)`` with ``R(0) = 1``.
The kernel matrix of a sample ``x_1, ..., x_n`` is the uncentered
``C_n = {R(x_i - x_j)} / n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.spatial.distance import pdist, squareform

from ._validation import as_points, check_positive

FAMILIES = ("gaussian", "exponential")


class EigenDecompositionError(np.linalg.LinAlgError):
    """Raised when the symmetric eigensolver fails to converge."""

    def __init__(self, shape, reason=""):
        self.shape = tuple(shape)
        msg = f"eigendecomposition of {shape[0]}x{shape[1]} kernel matrix failed"
        super().__init__(f"{msg}: {reason}" if reason else msg)


@dataclass(frozen=True)
class KernelSpec:
    """A stationary kernel ``R`` with bandwidth ``gamma``.

    Parameters
    ----------
    family : {"gaussian", "exponential"}
        ``exp(-gamma |x|^2)`` or ``exp(-gamma |x|)``.
    gamma : float, default=1.0
        Positive bandwidth.
    """

    family: str = "gaussian"
    gamma: float = 1.0

    def __post_init__(self):
        family = str(self.family).lower()
        if family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}; expected one of {FAMILIES}")
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "gamma", check_positive(self.gamma, "gamma"))

    def from_sqdist(self, sqdist):
        """Evaluate ``R`` from squared Euclidean lengths."""
        sqdist = np.asarray(sqdist, dtype=np.float64)
        if self.family == "gaussian":
            return np.exp(-self.gamma * sqdist)
        return np.exp(-self.gamma * np.sqrt(sqdist))

    def __call__(self, displacement):
        return eval_kernel(self, displacement)


def eval_kernel(spec: KernelSpec, displacement):
    """Evaluate ``R`` at one displacement (shape ``(d,)``) or a stack ``(..., d)``."""
    x = np.asarray(displacement, dtype=np.float64)
    sq = np.einsum("...i,...i->...", x, x)
    out = spec.from_sqdist(sq)
    return float(out) if out.ndim == 0 else out


def smoothness_constants(spec: KernelSpec) -> tuple[float, float]:
    """Return ``(theta, d_theta)`` with ``R(0) - R(x) ~ d_theta |x|^theta`` near 0."""
    theta = 2.0 if spec.family == "gaussian" else 1.0
    return theta, spec.gamma


def kernel_gradient(spec: KernelSpec, displacement):
    """Gradient of ``R`` at ``displacement``; zero at the origin for both families."""
    x = np.asarray(displacement, dtype=np.float64)
    sq = np.einsum("...i,...i->...", x, x)
    r = spec.from_sqdist(sq)
    if spec.family == "gaussian":
        return (-2.0 * spec.gamma * r)[..., None] * x
    norm = np.sqrt(sq)
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(norm > 0, -spec.gamma * r / norm, 0.0)
    return scale[..., None] * x


@dataclass(frozen=True)
class KernelMatrix:
    """Symmetric ``n x n`` matrix with entries ``R(x_i - x_j) / n``."""

    values: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def psd_tolerance(self) -> float:
        return 1e-10 * self.n

    def is_psd(self) -> bool:
        lam = linalg.eigvalsh(self.values)
        return bool(lam[0] >= -self.psd_tolerance())


def build_kernel_matrix(spec: KernelSpec, points) -> KernelMatrix:
    """Build ``C_n = {R(x_i - x_j)} / n``.

    Distances come from ``pdist`` and are mirrored by ``squareform``, so the
    matrix is exactly symmetric and its diagonal is exactly ``1 / n``.
    """
    X = as_points(points, name="points")
    n = X.shape[0]
    sq = squareform(pdist(X, "sqeuclidean")) if n > 1 else np.zeros((1, 1))
    values = spec.from_sqdist(sq) / n
    values.setflags(write=False)
    return KernelMatrix(values)


@dataclass(frozen=True)
class EigenPairs:
    """Eigenvalues in descending order and matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)

    def top(self, m):
        return self.eigenvalues[:m], self.eigenvectors[:, :m]


def _fix_signs(V):
    # largest-|entry| positive; argmax picks the lowest index on ties
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def eigendecompose(matrix) -> EigenPairs:
    """Symmetric eigendecomposition with a deterministic sign convention.

    Parameters
    ----------
    matrix : KernelMatrix or ndarray
        Symmetric matrix.

    Returns
    -------
    EigenPairs
        Descending eigenvalues; each eigenvector has its entry of largest
        magnitude positive (lowest index wins ties).
    """
    A = matrix.values if isinstance(matrix, KernelMatrix) else np.asarray(matrix, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    try:
        lam, V = linalg.eigh(A, driver="evr")
    except (linalg.LinAlgError, ValueError) as exc:
        raise EigenDecompositionError(A.shape, str(exc)) from exc
    if not (np.all(np.isfinite(lam)) and np.all(np.isfinite(V))):
        raise EigenDecompositionError(A.shape, "non-finite output")
    # eigh is ascending; a stable reversal keeps tied eigenvalues in column order
    order = np.argsort(-lam, kind="stable")
    lam = lam[order]
    V = _fix_signs(V[:, order])
    lam.setflags(write=False)
    V.setflags(write=False)
    return EigenPairs(lam, V)


def procrustes_align(V, V0):
    """Orthogonal ``O`` minimising ``||V O - V0||_F`` and the attained residual.

    ``O`` is the polar factor of ``V^T V0``.
    """
    V = np.asarray(V, dtype=np.float64)
    V0 = np.asarray(V0, dtype=np.float64)
    if V.shape != V0.shape or V.ndim != 2:
        raise ValueError(f"dimension mismatch: {V.shape} vs {V0.shape}")
    U, _, Wt = np.linalg.svd(V.T @ V0)
    O = U @ Wt
    residual = float(np.linalg.norm(V @ O - V0, "fro"))
    return O, residual
