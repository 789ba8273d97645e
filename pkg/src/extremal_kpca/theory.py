"""Perturbation statistics of the kernel matrix of extremes from a linear factor model.

The idealised kernel matrix collapses every clustered extreme onto its
spectral atom ``s_k = a_k / |a_k|``. The statistics here measure how far the
observed matrix is from that ideal, and check the sample against the limit
laws for the angular deviations ``Y_i - s_k``.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from ._validation import check_count, check_positive
from .extremes import ExtremalSample, extract_extremes
from .generators import FactorModelSpec, gen_contaminated_lfm, make_rng, sample_pareto
from .kernels import (
    KernelSpec,
    build_kernel_matrix,
    eigendecompose,
    procrustes_align,
    smoothness_constants,
)

UNASSIGNED = -1


@dataclass(frozen=True)
class SpectralAtoms:
    """Atoms ``s_k``, column norms ``w_k``, total weight ``sum w_k^alpha`` and masses."""

    atoms: np.ndarray
    column_norms: np.ndarray
    total_weight: float
    masses: np.ndarray
    alpha: float

    def __len__(self):
        return len(self.column_norms)


def spectral_atoms(spec: FactorModelSpec) -> SpectralAtoms:
    """Discrete angular measure of ``X = A Z``: atoms at normalised columns."""
    norms = np.linalg.norm(spec.A, axis=0)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise ValueError(f"column {int(zero[0])} of A is all zero")
    weights = norms**spec.alpha
    total = float(weights.sum())
    return SpectralAtoms((spec.A / norms).T.copy(), norms, total, weights / total, spec.alpha)


@dataclass(frozen=True)
class ClusterAssignment:
    """Factor responsible for each extreme, ``-1`` where no factor qualifies.

    ``labels`` is aligned with the rows of the extremal sample.
    """

    labels: np.ndarray = field(repr=False)
    n_clusters: int
    threshold: float
    overlap_detected: bool

    @property
    def counts(self) -> np.ndarray:
        return np.bincount(self.labels[self.labels >= 0], minlength=self.n_clusters)

    @property
    def unassigned(self) -> np.ndarray:
        return np.flatnonzero(self.labels == UNASSIGNED)

    def members(self, k) -> np.ndarray:
        """Row positions (into the extremal sample) of cluster ``k``."""
        return np.flatnonzero(self.labels == k)


def assign_clusters(sample: ExtremalSample, factors, spec: FactorModelSpec) -> ClusterAssignment:
    """Attribute extremes to factors by ``Z_ik > u_n / w^(1/alpha)``.

    Parameters
    ----------
    sample : ExtremalSample
    factors : array-like of shape (n, p)
        Factor draws for every row of the original data; rows are picked out
        with ``sample.source_indices``.
    spec : FactorModelSpec

    Returns
    -------
    ClusterAssignment
        When several factors qualify the one with the largest ``w_k Z_ik``
        wins and ``overlap_detected`` is set.
    """
    Z = np.asarray(factors, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[1] != spec.n_factors:
        raise ValueError(f"factors must have shape (n, {spec.n_factors}), got {Z.shape}")
    if len(sample) and sample.source_indices.max() >= Z.shape[0]:
        raise ValueError("factors have fewer rows than the sample's source indices require")
    Z = Z[sample.source_indices]
    atoms = spectral_atoms(spec)
    level = sample.threshold / atoms.total_weight ** (1.0 / spec.alpha)
    hits = Z > level
    contribution = np.where(hits, Z * atoms.column_norms, -np.inf)
    labels = np.where(hits.any(axis=1), np.argmax(contribution, axis=1), UNASSIGNED)
    overlap = bool(np.any(hits.sum(axis=1) > 1))
    return ClusterAssignment(labels.astype(np.intp), spec.n_factors, float(sample.threshold), overlap)


@dataclass(frozen=True)
class PerturbationDecomposition:
    """``C_n = C0 + Delta`` in cluster-block order.

    ``order`` maps block positions back to rows of the extremal sample;
    ``block_layout[k]`` is the ``(start, stop)`` range of cluster ``k``;
    assigned rows come first, ``n_assigned`` of them.
    """

    C: np.ndarray = field(repr=False)
    C0: np.ndarray = field(repr=False)
    delta: np.ndarray = field(repr=False)
    order: np.ndarray = field(repr=False)
    block_layout: dict
    n_assigned: int

    @property
    def delta_b(self) -> np.ndarray:
        return self.delta[: self.n_assigned, : self.n_assigned]


def perturbation_matrices(
    kernel: KernelSpec, atoms: SpectralAtoms, sample: ExtremalSample, clusters: ClusterAssignment
) -> PerturbationDecomposition:
    """Kernel matrix of the extremes, its atom-collapsed reference and their difference.

    Reference entries on the clustered block ``(k1, k2)`` are
    ``R(s_k1 - s_k2) / N``, zero elsewhere; both matrices share the ``1 / N``
    normalisation with ``N`` the total number of extremes.
    """
    if len(clusters.labels) != len(sample):
        raise ValueError("cluster labels do not match the sample")
    members = [clusters.members(k) for k in range(clusters.n_clusters)]
    sizes = [len(m) for m in members]
    n_assigned = int(sum(sizes))
    if n_assigned == 0:
        raise ValueError("no clustered extremes")
    order = np.concatenate(members + [clusters.unassigned])
    N = len(sample)
    C = np.array(build_kernel_matrix(kernel, sample.angles[order]).values)
    atom_gram = build_kernel_matrix(kernel, atoms.atoms).values * len(atoms)  # R(s_k1 - s_k2)
    block_ids = np.repeat(np.arange(clusters.n_clusters), sizes)
    C0 = np.zeros((N, N))
    C0[:n_assigned, :n_assigned] = atom_gram[np.ix_(block_ids, block_ids)] / N
    delta = C - C0
    for arr in (C, C0, delta):
        arr.setflags(write=False)
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    layout = {k: (int(bounds[k]), int(bounds[k + 1])) for k in range(clusters.n_clusters)}
    return PerturbationDecomposition(C, C0, delta, order, layout, n_assigned)


def delta_b_frobenius(
    kernel: KernelSpec, atoms: SpectralAtoms, sample: ExtremalSample, clusters: ClusterAssignment, chunk=1024
) -> float:
    """``|Delta_B|_F`` accumulated over row chunks, without the dense ``N x N`` matrices.

    Agrees with ``perturbation_matrices(...).delta_b`` up to summation order.
    """
    if len(clusters.labels) != len(sample):
        raise ValueError("cluster labels do not match the sample")
    assigned = np.flatnonzero(clusters.labels >= 0)
    if assigned.size == 0:
        raise ValueError("no clustered extremes")
    Y = sample.angles[assigned]
    lab = clusters.labels[assigned]
    atom_gram = kernel.from_sqdist(cdist(atoms.atoms, atoms.atoms, "sqeuclidean"))
    total = 0.0
    for start in range(0, len(Y), chunk):
        rows = slice(start, start + chunk)
        diff = kernel.from_sqdist(cdist(Y[rows], Y, "sqeuclidean")) - atom_gram[np.ix_(lab[rows], lab)]
        total += float(np.einsum("ij,ij->", diff, diff))
    return float(np.sqrt(total) / len(sample))


@dataclass(frozen=True)
class FrobeniusStats:
    """Blockwise squared-deviation sums ``F``, their normalised form ``G`` and norms of ``Delta``."""

    F: np.ndarray
    G: np.ndarray
    delta_b_frobenius: float
    delta_frobenius: float
    delta_opnorm: float


def frobenius_stats(decomp: PerturbationDecomposition) -> FrobeniusStats:
    """``F[k1, k2]`` sums ``delta_ij^2`` over block ``(k1, k2)``; ``G = N^2 F / (N_k1 N_k2)``.

    ``G`` is NaN for blocks touching an empty cluster.
    """
    p = len(decomp.block_layout)
    N = decomp.C.shape[0]
    sq = decomp.delta_b**2
    F = np.zeros((p, p))
    sizes = np.zeros(p)
    for k1, (a1, b1) in decomp.block_layout.items():
        sizes[k1] = b1 - a1
        for k2, (a2, b2) in decomp.block_layout.items():
            F[k1, k2] = sq[a1:b1, a2:b2].sum()
    with np.errstate(invalid="ignore", divide="ignore"):
        G = np.where(np.outer(sizes, sizes) > 0, F * N**2 / np.outer(sizes, sizes), np.nan)
    return FrobeniusStats(
        F,
        G,
        float(np.linalg.norm(decomp.delta_b, "fro")),
        float(np.linalg.norm(decomp.delta, "fro")),
        float(np.linalg.norm(decomp.delta, 2)),
    )


def _gap_is_zero(gap, scale):
    return not gap > 1e-12 * max(scale, np.finfo(float).tiny)


def davis_kahan_bound(lambda0, delta, m) -> float:
    """``2 min(sqrt(m) |Delta|_op, |Delta|_F) / (lambda0_m - lambda0_{m+1})``.

    ``lambda0`` holds the reference eigenvalues in descending order. A gap
    below ``1e-12`` times the largest eigenvalue magnitude counts as zero.
    """
    lam = np.asarray(lambda0, dtype=np.float64)
    m = check_count(m, "m")
    if m >= len(lam):
        raise ValueError(f"m={m} leaves no (m+1)-th eigenvalue among {len(lam)}")
    gap = lam[m - 1] - lam[m]
    if _gap_is_zero(gap, np.max(np.abs(lam))):
        raise ValueError("Davis-Kahan gap is zero")
    D = np.asarray(delta, dtype=np.float64)
    op = np.linalg.norm(D, 2)
    fro = np.linalg.norm(D, "fro")
    return float(2.0 * min(np.sqrt(m) * op, fro) / gap)


@dataclass(frozen=True)
class DavisKahanCheck:
    """One comparison of aligned eigenvectors against the bound; ``satisfied`` is None on a zero gap."""

    bound: float
    residual: float
    satisfied: bool | None
    gap: float
    n_extremes: int


def davis_kahan_check(C, C0, m) -> DavisKahanCheck:
    """Align the top-``m`` eigenvectors of ``C`` to those of ``C0`` and compare with the bound."""
    C = np.asarray(C, dtype=np.float64)
    C0 = np.asarray(C0, dtype=np.float64)
    ref = eigendecompose(C0)
    obs = eigendecompose(C)
    lam0 = ref.eigenvalues
    gap = float(lam0[m - 1] - lam0[m]) if m < len(lam0) else 0.0
    _, residual = procrustes_align(obs.eigenvectors[:, :m], ref.eigenvectors[:, :m])
    try:
        bound = davis_kahan_bound(lam0, C - C0, m)
    except ValueError as exc:
        if "gap is zero" not in str(exc):
            raise
        return DavisKahanCheck(float("nan"), residual, None, gap, C.shape[0])
    return DavisKahanCheck(bound, residual, residual <= bound, gap, C.shape[0])


def davis_kahan_replicate(model: FactorModelSpec, kernel: KernelSpec, n, top_k, m, rng) -> DavisKahanCheck:
    """Simulate the factor model once and run :func:`davis_kahan_check` on its extremes."""
    data = gen_contaminated_lfm(model, n, rng)
    sample = extract_extremes(data.points, top_k=top_k)
    clusters = assign_clusters(sample, data.factors, model)
    decomp = perturbation_matrices(kernel, spectral_atoms(model), sample, clusters)
    return davis_kahan_check(decomp.C, decomp.C0, m)


@dataclass(frozen=True)
class LimitLawSpec:
    """Limit laws of the angular deviations of extremes from a factor model.

    ``mean_measure_constants(k)`` returns both candidate constants for the
    limiting point process: ``c^2 w_k^2 / 2`` (paired with the rays ``b``) and
    ``c^2 w_k^(2 alpha) / 2`` (paired with ``b_hat``).
    """

    model: FactorModelSpec

    def mean_measure_constants(self, k) -> tuple[float, float]:
        c = self.model.c_alpha
        w_k = float(np.linalg.norm(self.model.A[:, k]))
        return c**2 * w_k**2 / 2.0, c**2 * w_k ** (2 * self.model.alpha) / 2.0


def _project_off(x, a):
    # remove the component along a, twice for orthogonality at rounding level
    for _ in range(2):
        x = x - np.multiply.outer(x @ a, a) / (a @ a)
    return x


def sample_limit_law(spec: LimitLawSpec, k, rng, size=None):
    """Draws of ``S^(k)``, the weak limit of ``u_n (Y_i - s_k)`` for cluster ``k``.

    ``S^(k) = P_k(X_{-k}) / W``: the non-``k`` part of the factor model with
    its ``a_k`` component removed, divided by an independent Pareto(alpha)
    variable. Each draw is orthogonal to ``a_k``.

    Parameters
    ----------
    spec : LimitLawSpec
    k : int
        0-based factor index.
    rng : numpy.random.Generator
    size : int, optional
        Number of draws; a single ``(d,)`` vector when omitted.
    """
    model = spec.model
    d, p = model.A.shape
    if not 0 <= k < p:
        raise ValueError(f"factor index {k} out of range for p={p}")
    count = 1 if size is None else check_count(size, "size")
    a_k = model.A[:, k]
    others = np.delete(np.arange(p), k)
    Z = model.draw_factors(rng, (count, p - 1))
    W = sample_pareto(model.alpha, rng, count)
    if p == 1:
        out = np.zeros((count, d))
    else:
        X = Z @ model.A[:, others].T
        out = _project_off(X, a_k) / W[:, None]
    return out[0] if size is None else out


@dataclass(frozen=True)
class RayVectors:
    """Rays ``b^(j,k)`` (with the ``w_k`` factor) and ``b_hat^(j,k)`` for ``j != k``."""

    indices: np.ndarray
    b: np.ndarray
    b_hat: np.ndarray


def ray_vectors(spec: LimitLawSpec, k) -> RayVectors:
    """``b_hat^(j,k) = a_j - a_k <a_k, a_j> / w_k^2`` and ``b^(j,k) = w_k b_hat^(j,k)``."""
    A = spec.model.A
    p = A.shape[1]
    if p < 2:
        raise ValueError("rays need at least two factors")
    if not 0 <= k < p:
        raise ValueError(f"factor index {k} out of range for p={p}")
    a_k = A[:, k]
    w_k = float(np.linalg.norm(a_k))
    idx = np.delete(np.arange(p), k)
    b_hat = _project_off(A[:, idx].T, a_k)
    return RayVectors(idx, w_k * b_hat, b_hat)


def rescaled_deviations(sample: ExtremalSample, clusters: ClusterAssignment, atoms: SpectralAtoms, k, scale):
    """``scale * (Y_i - s_k)`` for the extremes attributed to factor ``k``."""
    return scale * (sample.angles[clusters.members(k)] - atoms.atoms[k])


@dataclass(frozen=True)
class ClusterProcessReport:
    """Point-process diagnostic of one cluster.

    ``ray_fraction`` is the share of rescaled points with norm above
    ``epsilon`` lying within ``angle_tol`` radians of a ray's span.
    ``counts`` are the numbers of points with norm above each ``t`` and the
    two ``predicted_*`` arrays are the mean-measure values for the two
    candidate constants.
    """

    k: int
    n_points: int
    n_outside: int
    ray_fraction: float
    t_grid: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)
    predicted_with_b: np.ndarray = field(repr=False)
    predicted_with_b_hat: np.ndarray = field(repr=False)
    fitted_tail_slope: float
    note: str = ""


@dataclass(frozen=True)
class PointProcessReport:
    scale: float
    alpha: float
    theta: float
    levels_note: str
    clusters: list


def _angle_to_spans(points, directions):
    unit_pts = points / np.linalg.norm(points, axis=1, keepdims=True)
    unit_dir = directions / np.linalg.norm(directions, axis=1, keepdims=True)
    cos = np.clip(np.abs(unit_pts @ unit_dir.T), 0.0, 1.0)
    return np.arccos(cos.max(axis=1))


def _loglog_slope(x, y):
    keep = (x > 0) & (y > 0)
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


def point_process_diagnostic(
    sample: ExtremalSample,
    clusters: ClusterAssignment,
    model: FactorModelSpec,
    kernel: KernelSpec,
    n,
    *,
    epsilon=1.0,
    angle_tol=0.1,
    t_grid=None,
) -> PointProcessReport:
    """Compare ``u^2 n^(-1/alpha) (Y_i - s_k)`` with its Poisson limit on rays.

    The limit holds for ``alpha < 2 theta`` with ``n^(-1/alpha) u^2 -> inf``;
    the report records whether the inputs sit in that regime but does not
    refuse to run outside it. The default ``t_grid`` spans the 50% to 98%
    quantiles of the norms above ``epsilon``.
    """
    n = check_count(n, "n")
    epsilon = check_positive(epsilon, "epsilon")
    theta, _ = smoothness_constants(kernel)
    alpha = model.alpha
    u = sample.threshold
    scale = u**2 * n ** (-1.0 / alpha)
    notes = []
    if not alpha < 2 * theta:
        notes.append(f"alpha={alpha} is not below 2*theta={2 * theta}")
    if not scale > 1:
        notes.append(f"u^2 n^(-1/alpha) = {scale:.3g} is not large")
    atoms = spectral_atoms(model)
    law = LimitLawSpec(model)
    reports = []
    for k in range(model.n_factors):
        pts = rescaled_deviations(sample, clusters, atoms, k, scale)
        norms = np.linalg.norm(pts, axis=1)
        outside = norms > epsilon
        if len(pts) == 0 or model.n_factors < 2:
            reports.append(ClusterProcessReport(k, len(pts), 0, float("nan"), np.array([]), np.array([]),
                                                np.array([]), np.array([]), float("nan"),
                                                "empty cluster" if len(pts) == 0 else "single factor"))
            continue
        rays = ray_vectors(law, k)
        frac = float(np.mean(_angle_to_spans(pts[outside], rays.b_hat) < angle_tol)) if outside.any() else float("nan")
        if t_grid is None:
            big = norms[outside]
            grid = np.geomspace(*np.quantile(big, [0.5, 0.98]), 8) if big.size >= 4 else np.array([])
        else:
            grid = np.asarray(t_grid, dtype=np.float64)
        counts = (norms[None, :] > grid[:, None]).sum(axis=1)
        c_b, c_hat = law.mean_measure_constants(k)
        len_b = np.linalg.norm(rays.b, axis=1)
        len_hat = np.linalg.norm(rays.b_hat, axis=1)
        pred_b = c_b * ((len_b[None, :] / grid[:, None]) ** alpha).sum(axis=1)
        pred_hat = c_hat * ((len_hat[None, :] / grid[:, None]) ** alpha).sum(axis=1)
        reports.append(ClusterProcessReport(k, len(pts), int(outside.sum()), frac, grid, counts,
                                            pred_b, pred_hat, _loglog_slope(grid, counts.astype(float))))
    return PointProcessReport(scale, alpha, theta, "; ".join(notes), reports)


def frobenius_regime(alpha, theta) -> tuple[str, float]:
    """Regime name and the log-log slope of ``|Delta_B|_F`` against ``u`` it predicts.

    Raises at the regime boundaries ``alpha in {2, 2 theta}``.
    """
    alpha = check_positive(alpha, "alpha")
    if alpha > 2 * theta:
        return "light", -1.0
    if 2 < alpha < 2 * theta:
        return "intermediate", -1.0
    if alpha < 2:
        return "heavy", -(2.0 - alpha / 2.0)
    raise ValueError(f"alpha={alpha} sits on a regime boundary for theta={theta}; pass expected_slope")


def scaled_statistic(frobenius, u, n, alpha, regime):
    """Rescale ``|Delta_B|_F`` by the rate of its regime so it should stay of order one."""
    u = np.asarray(u, dtype=np.float64)
    if regime == "heavy":
        return u ** (2.0 - alpha / 2.0) * n ** (-1.0 / alpha + 0.5) * frobenius
    return u * frobenius


@dataclass(frozen=True)
class RateCheck:
    """Log-log regression of the replicate-averaged ``|Delta_B|_F`` on the threshold.

    ``frobenius`` and ``scaled`` have one row per replicate and one column per
    threshold. ``passed`` uses ``|fitted - expected| <= 0.3`` except in the
    heavy regime, where the ratio of the largest to the smallest per-threshold
    median of ``scaled`` must stay below 3.
    """

    u_grid: np.ndarray
    statistic_per_u: np.ndarray
    fitted_slope: float
    expected_slope: float
    replicates: int
    regime: str
    frobenius: np.ndarray = field(repr=False)
    scaled: np.ndarray = field(repr=False)
    median_ratio: float
    passed: bool
    warnings: tuple = ()


SLOPE_TOLERANCE = 0.3
MEDIAN_RATIO_LIMIT = 3.0
# default thresholds, log-spaced: top 1% to top 0.1% of the sample, or one
# decade deeper when alpha < 2 so that u^2 n^(-1/alpha) is large on the grid
DEFAULT_EXCEEDANCE_FRACTIONS = tuple(np.logspace(-2.0, -3.0, 5))
HEAVY_EXCEEDANCE_FRACTIONS = tuple(np.logspace(-3.0, -4.0, 5))


def default_ranks(n, alpha=None):
    """Exceedance counts for the default threshold grid of a sample of size ``n``.

    Tail indices ``alpha < 2`` get the deeper window.
    """
    fractions = HEAVY_EXCEEDANCE_FRACTIONS if alpha is not None and alpha < 2 else DEFAULT_EXCEEDANCE_FRACTIONS
    return tuple(int(r) for r in np.round(check_count(n, "n") * np.asarray(fractions)))


def threshold_grid(radii, ranks):
    """Thresholds at the given exceedance counts: the ``(rank + 1)``-th largest radius."""
    r = np.sort(np.asarray(radii, dtype=np.float64))[::-1]
    ranks = np.asarray(ranks, dtype=int)
    if np.any(ranks < 1) or np.any(ranks >= len(r)):
        raise ValueError("ranks must lie in [1, n)")
    return np.sort(r[ranks])


def _replicate_frobenius(model, kernel, n, u_grid, seed):
    data = gen_contaminated_lfm(model, n, make_rng(seed))
    atoms = spectral_atoms(model)
    out = np.full(len(u_grid), np.nan)
    for i, u in enumerate(u_grid):
        try:
            sample = extract_extremes(data.points, threshold=float(u))
            clusters = assign_clusters(sample, data.factors, model)
            out[i] = delta_b_frobenius(kernel, atoms, sample, clusters)
        except ValueError as exc:
            if "no exceedances" in str(exc) or "no clustered extremes" in str(exc):
                continue
            raise
    return out


def rate_check(
    model: FactorModelSpec,
    kernel: KernelSpec,
    n,
    u_grid=None,
    replicates=20,
    seed=0,
    *,
    ranks=None,
    expected_slope=None,
    n_jobs=1,
) -> RateCheck:
    """Estimate how ``|Delta_B|_F`` decays in the threshold ``u``.

    Replicate ``r`` simulates ``n`` observations from the seed ``seed + r``
    and evaluates every threshold on that one sample. Without ``u_grid`` the
    thresholds sit at the exceedance counts ``ranks`` of replicate 0, by
    default :func:`default_ranks` for ``model.alpha``.
    Thresholds where some replicate has no clustered extreme are dropped,
    together with every larger threshold, and a warning is issued.
    """
    n = check_count(n, "n")
    replicates = check_count(replicates, "replicates")
    theta, _ = smoothness_constants(kernel)
    if expected_slope is None:
        regime, expected = frobenius_regime(model.alpha, theta)
    else:
        regime = "heavy" if model.alpha < 2 else ("light" if model.alpha > 2 * theta else "intermediate")
        expected = float(expected_slope)
    if u_grid is None:
        pilot = gen_contaminated_lfm(model, n, make_rng(seed))
        u_grid = threshold_grid(np.linalg.norm(pilot.points, axis=1), default_ranks(n, model.alpha) if ranks is None else ranks)
    grid = np.asarray(u_grid, dtype=np.float64)
    if grid.ndim != 1 or len(grid) < 4 or np.any(np.diff(grid) <= 0) or np.any(grid <= 0):
        raise ValueError("u_grid must be a strictly increasing positive grid of length >= 4")

    seeds = [seed + r for r in range(replicates)]
    job = lambda s: _replicate_frobenius(model, kernel, n, grid, s)
    if n_jobs == 1:
        rows = [job(s) for s in seeds]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            rows = list(pool.map(job, seeds))
    frob = np.vstack(rows)

    notes = []
    bad = np.flatnonzero(np.isnan(frob).any(axis=0))
    if bad.size:
        keep = int(bad[0])
        msg = f"no clustered extremes at u={grid[keep]:.6g}; grid shrunk to {keep} thresholds"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)
        if keep < 4:
            raise ValueError(msg + ", fewer than 4 remain")
        grid, frob = grid[:keep], frob[:, :keep]

    mean = frob.mean(axis=0)
    slope = float(np.polyfit(np.log(grid), np.log(mean), 1)[0])
    scaled = scaled_statistic(frob, grid[None, :], n, model.alpha, regime)
    med = np.median(scaled, axis=0)
    ratio = float(med.max() / med.min())
    if regime == "heavy":
        passed = ratio < MEDIAN_RATIO_LIMIT
    else:
        passed = abs(slope - expected) <= SLOPE_TOLERANCE
    return RateCheck(grid, mean, slope, expected, replicates, regime, frob, scaled, ratio, bool(passed), tuple(notes))
