"""Kernel density estimates, scree summaries, KS distances and the Hill estimator."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from ._validation import check_count
from .kernels import EigenPairs

SCREE_RATIO = 2.0
SCREE_CAP = 10


@dataclass(frozen=True)
class KdeEstimate:
    grid: np.ndarray
    density: np.ndarray = field(repr=False)
    bandwidth: float

    def integral(self) -> float:
        return float(np.trapezoid(self.density, self.grid))


def _weighted_quantiles(x, w, qs):
    order = np.argsort(x, kind="stable")
    x, w = x[order], w[order]
    cdf = np.cumsum(w) - 0.5 * w
    return np.interp(qs, cdf / w.sum(), x)


def silverman_bandwidth(data, weights=None) -> float:
    """``0.9 min(sd, IQR / 1.34) n^(-1/5)``, using ``sd`` alone when the IQR is zero.

    With weights the moments and quantiles are weighted and ``n`` is the
    effective sample size ``(sum w)^2 / sum w^2``.
    """
    x = np.asarray(data, dtype=np.float64).ravel()
    if x.size < 2:
        raise ValueError("need at least two observations")
    if weights is None:
        sd = np.std(x, ddof=1)
        q1, q3 = np.quantile(x, [0.25, 0.75])
        n_eff = x.size
    else:
        w = np.asarray(weights, dtype=np.float64).ravel()
        mean = np.average(x, weights=w)
        sd = np.sqrt(np.average((x - mean) ** 2, weights=w))
        q1, q3 = _weighted_quantiles(x, w, [0.25, 0.75])
        n_eff = w.sum() ** 2 / (w**2).sum()
    spread = min(sd, (q3 - q1) / 1.34) if q3 > q1 else sd
    h = 0.9 * spread * n_eff ** (-0.2)
    if not h > 0:
        raise ValueError("zero bandwidth")
    return float(h)


def kde_gaussian(data, grid, weights=None, bandwidth=None) -> KdeEstimate:
    """Gaussian kernel density estimate on ``grid``.

    Parameters
    ----------
    data : array-like of shape (n,)
    grid : array-like of shape (g,)
    weights : array-like of shape (n,), optional
        Nonnegative weights, normalised internally.
    bandwidth : float, optional
        Defaults to :func:`silverman_bandwidth`.
    """
    x = np.asarray(data, dtype=np.float64).ravel()
    g = np.asarray(grid, dtype=np.float64).ravel()
    if weights is None:
        w = np.full(x.size, 1.0 / max(x.size, 1))
    else:
        w = np.asarray(weights, dtype=np.float64).ravel()
        if w.shape != x.shape or np.any(w < 0) or not w.sum() > 0:
            raise ValueError("weights must be nonnegative, one per observation, not all zero")
        w = w / w.sum()
    h = silverman_bandwidth(x, None if weights is None else w) if bandwidth is None else float(bandwidth)
    dens = np.empty(g.size)
    # chunk over the grid to bound memory for large samples
    step = max(1, 2_000_000 // max(x.size, 1))
    for start in range(0, g.size, step):
        z = (g[start : start + step, None] - x[None, :]) / h
        dens[start : start + step] = sps.norm.pdf(z) @ w / h
    return KdeEstimate(g, dens, h)


def local_maxima(estimate) -> list[int]:
    """Strict interior local maxima; a flat top is reported at its leftmost index."""
    y = np.asarray(getattr(estimate, "density", estimate), dtype=np.float64)
    if y.size < 3:
        raise ValueError("need at least three grid points")
    peaks = []
    i = 1
    while i < y.size - 1:
        if y[i] > y[i - 1]:
            j = i
            while j + 1 < y.size and y[j + 1] == y[i]:
                j += 1
            if j + 1 < y.size and y[j + 1] < y[i]:
                peaks.append(i)
            i = j + 1
        else:
            i += 1
    return peaks


def scree_data(eigenpairs: EigenPairs, top) -> list[tuple[int, float]]:
    """The ``top`` largest eigenvalues with 1-based indices."""
    lam = eigenpairs.eigenvalues
    top = check_count(top, "top")
    if top > len(lam):
        raise ValueError(f"top={top} exceeds the number of eigenvalues {len(lam)}")
    return [(i + 1, float(v)) for i, v in enumerate(lam[:top])]


def scree_components(eigenvalues, ratio=SCREE_RATIO, cap=SCREE_CAP) -> int:
    """Smallest ``m`` with ``lambda_m / lambda_{m+1} > ratio``, at most ``cap``.

    Falls back to ``cap`` (or the number of eigenvalues) when no gap qualifies.
    """
    lam = np.asarray(eigenvalues, dtype=np.float64)
    limit = min(cap, len(lam) - 1)
    for m in range(1, limit + 1):
        nxt = lam[m]
        if nxt <= 0 or lam[m - 1] / nxt > ratio:
            return m
    return max(1, min(cap, len(lam)))


def ks_statistic(sample, reference) -> float:
    """Kolmogorov-Smirnov distance to a CDF (callable) or to a second sample."""
    x = np.asarray(sample, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("empty sample")
    if callable(reference):
        return float(sps.ks_1samp(x, reference).statistic)
    return float(sps.ks_2samp(x, np.asarray(reference, dtype=np.float64).ravel()).statistic)


def hill_estimator(sample, k_top) -> float:
    """Tail index from the ``k_top`` largest values: ``1 / mean(log(X_(i) / X_(k+1)))``."""
    x = np.asarray(sample, dtype=np.float64).ravel()
    if np.any(x <= 0):
        raise ValueError("Hill estimator needs positive values")
    k = check_count(k_top, "k_top")
    if k >= x.size:
        raise ValueError(f"k_top={k} must be below the sample size {x.size}")
    top = np.sort(x)[::-1][: k + 1]
    return float(1.0 / np.mean(np.log(top[:k] / top[k])))


def arch_spectral_density(n_mc, grid, rng) -> KdeEstimate:
    """Monte Carlo angular density of the integrated ARCH(1) pairs.

    Draws ``Z`` standard normal and smooths the angles ``arctan(Z^2)`` with
    self-normalised weights ``sqrt(1 + Z^4)``.
    """
    n_mc = check_count(n_mc, "n_mc", minimum=1000)
    z = rng.standard_normal(n_mc)
    return kde_gaussian(np.arctan(z**2), grid, weights=np.sqrt(1.0 + z**4))
