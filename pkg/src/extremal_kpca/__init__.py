"""Kernel PCA on the angular part of multivariate extremes."""

__version__ = "0.1.0"

from .estimator import ExtremalKernelPCA
from .extremes import ExtremalSample, extract_extremes, polar_decompose
from .kernels import (
    EigenDecompositionError,
    EigenPairs,
    KernelMatrix,
    KernelSpec,
    build_kernel_matrix,
    eigendecompose,
    eval_kernel,
    kernel_gradient,
    procrustes_align,
    smoothness_constants,
)
from .kpca import (
    KpcaModel,
    PreimageObjective,
    fit_kpca,
    objective_coefficients,
    objective_gradient,
    objective_value,
)
from .preimage import (
    PgdSettings,
    PreimageDivergenceError,
    PreimageResult,
    batch_preimages,
    lipschitz_step_size,
    project_to_sphere,
    solve_preimage,
)

__all__ = [
    "EigenDecompositionError",
    "EigenPairs",
    "ExtremalKernelPCA",
    "ExtremalSample",
    "KernelMatrix",
    "KernelSpec",
    "KpcaModel",
    "PgdSettings",
    "PreimageDivergenceError",
    "PreimageObjective",
    "PreimageResult",
    "batch_preimages",
    "build_kernel_matrix",
    "eigendecompose",
    "eval_kernel",
    "extract_extremes",
    "fit_kpca",
    "kernel_gradient",
    "lipschitz_step_size",
    "objective_coefficients",
    "objective_gradient",
    "objective_value",
    "polar_decompose",
    "procrustes_align",
    "project_to_sphere",
    "smoothness_constants",
    "solve_preimage",
]
