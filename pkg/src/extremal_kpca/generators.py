"""Seeded samplers for heavy-tailed factor, spiked, circle and ARCH models.

Every sampler takes an explicit ``numpy.random.Generator``. Use
:func:`make_rng` to get the pinned PCG64 stream; replicate ``r`` of a study
seeded with ``s`` uses seed ``s + r``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_count, check_positive

FACTOR_LAWS = ("frechet", "pareto")
SIGNAL, NOISE = "signal", "noise"

# loading matrix of the two-factor simulation study; rows are coordinates
DEFAULT_LOADINGS = np.array([[0.1, 0.9], [0.2, 0.8], [0.3, 0.7], [0.4, 0.6]])
DEFAULT_SPIKE = DEFAULT_LOADINGS.copy()


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator; bit-identical streams across platforms for a given seed."""
    return np.random.Generator(np.random.PCG64(seed))


def frechet_ppf(u, alpha):
    """Inverse of ``F(x) = exp(-x^-alpha)``."""
    alpha = check_positive(alpha, "alpha")
    return (-np.log(u)) ** (-1.0 / alpha)


def pareto_ppf(u, alpha):
    """``u^(-1/alpha)``: maps a uniform on (0, 1] to a standard Pareto draw."""
    alpha = check_positive(alpha, "alpha")
    return np.asarray(u, dtype=np.float64) ** (-1.0 / alpha)


def sample_frechet(alpha, rng, size=None):
    """Fréchet(alpha) draws by inversion; always strictly positive and finite."""
    u = rng.random(size)
    # keep U inside (0, 1) so that neither tail maps to 0 or inf
    u = np.clip(u, np.finfo(float).tiny, np.nextafter(1.0, 0.0))
    return frechet_ppf(u, alpha)


def sample_pareto(alpha, rng, size=None):
    """Standard Pareto(alpha) draws, ``P(W > x) = x^-alpha`` for ``x >= 1``."""
    return pareto_ppf(1.0 - rng.random(size), alpha)


@dataclass(frozen=True)
class FactorModelSpec:
    """Linear factor model ``X = A Z + sigma * eps`` with nonnegative loadings.

    Parameters
    ----------
    A : array-like of shape (d, p)
        Loadings; column ``k`` is the direction of factor ``k``.
    alpha : float
        Tail index of the factors.
    c_alpha : float, default=1.0
        Tail constant, ``P(Z > z) ~ c_alpha z^-alpha``.
    factor_law : {"frechet", "pareto"}
    sigma : float, default=0.0
        Contamination level.
    """

    A: np.ndarray = field(default_factory=lambda: DEFAULT_LOADINGS.copy())
    alpha: float = 1.0
    c_alpha: float = 1.0
    factor_law: str = "frechet"
    sigma: float = 0.0

    def __post_init__(self):
        A = np.array(self.A, dtype=np.float64, ndmin=2)
        if A.ndim != 2 or not np.all(np.isfinite(A)):
            raise ValueError("A must be a finite d x p matrix")
        if np.any(A < 0):
            raise ValueError("A must have nonnegative entries")
        zero = np.flatnonzero(~A.any(axis=0))
        if zero.size:
            raise ValueError(f"column {int(zero[0])} of A is all zero")
        A.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "alpha", check_positive(self.alpha, "alpha"))
        object.__setattr__(self, "c_alpha", check_positive(self.c_alpha, "c_alpha"))
        object.__setattr__(self, "sigma", check_positive(self.sigma, "sigma", allow_zero=True))
        law = str(self.factor_law).lower()
        if law not in FACTOR_LAWS:
            raise ValueError(f"factor_law must be one of {FACTOR_LAWS}, got {self.factor_law!r}")
        object.__setattr__(self, "factor_law", law)

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @property
    def n_factors(self) -> int:
        return self.A.shape[1]

    def draw_factors(self, rng, size):
        sampler = sample_frechet if self.factor_law == "frechet" else sample_pareto
        return sampler(self.alpha, rng, size)


@dataclass(frozen=True)
class SpikedModelSpec:
    """``X = u N + sigma * eps`` with ``N ~ Normal(0, B B^T + sigma0^2 I)``."""

    B: np.ndarray = field(default_factory=lambda: DEFAULT_SPIKE.copy())
    sigma0: float = 1.0
    sigma: float = 0.1

    def __post_init__(self):
        B = np.array(self.B, dtype=np.float64, ndmin=2)
        if B.ndim != 2 or not np.any(B) or not np.all(np.isfinite(B)):
            raise ValueError("B must be a finite nonzero d x p matrix")
        B.setflags(write=False)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "sigma0", check_positive(self.sigma0, "sigma0", allow_zero=True))
        object.__setattr__(self, "sigma", check_positive(self.sigma, "sigma", allow_zero=True))


@dataclass(frozen=True)
class ArchSpec:
    """Integrated ARCH(1) recursion ``Y_t = (1 + Y_{t-1}) Z_t^2``."""

    length: int
    burn_in: int = 1000
    y0: float = 0.0

    def __post_init__(self):
        check_count(self.length, "length", minimum=2)
        check_count(self.burn_in, "burn_in", minimum=0)
        check_positive(self.y0, "y0", allow_zero=True)


@dataclass(frozen=True)
class LabeledSample:
    """Generated points with a signal/noise label per row.

    ``cluster_hint`` is the 0-based factor with the largest contribution and
    ``factors`` the latent factor draws, when the model has them.
    """

    points: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)
    cluster_hint: np.ndarray | None = field(default=None, repr=False)
    factors: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        n = len(self.points)
        others = [self.labels, self.cluster_hint, self.factors]
        if any(o is not None and len(o) != n for o in others):
            raise ValueError("points, labels, cluster_hint and factors must have equal length")

    def __len__(self):
        return len(self.points)


def _contamination(rng, n, d):
    # |standard normal| in each coordinate times one standard Fréchet per row
    return np.abs(rng.standard_normal((n, d))) * sample_frechet(1.0, rng, (n, 1))


def _label(signal, noise):
    dominant = np.linalg.norm(signal, axis=1) >= np.linalg.norm(noise, axis=1)
    return np.where(dominant, SIGNAL, NOISE)


def gen_contaminated_lfm(spec: FactorModelSpec, n, rng) -> LabeledSample:
    """Draw ``X_i = A Z_i + sigma eps_i`` with ground-truth labels and factors."""
    n = check_count(n, "n")
    Z = spec.draw_factors(rng, (n, spec.n_factors))
    eps = _contamination(rng, n, spec.dim)
    signal = Z @ spec.A.T
    noise = spec.sigma * eps
    hint = np.argmax(Z * np.linalg.norm(spec.A, axis=0), axis=1)
    return LabeledSample(signal + noise, _label(signal, noise), hint, Z)


def gen_spiked_angular_gaussian(spec: SpikedModelSpec, n, rng) -> LabeledSample:
    """Draw ``X_i = u_i N_i + sigma eps_i`` with Fréchet(1) radii ``u_i``."""
    n = check_count(n, "n")
    d, p = spec.B.shape
    u = sample_frechet(1.0, rng, (n, 1))
    g = rng.standard_normal((n, p))
    h = rng.standard_normal((n, d))
    eps = _contamination(rng, n, d)
    signal = u * (g @ spec.B.T + spec.sigma0 * h)
    noise = spec.sigma * eps
    return LabeledSample(signal + noise, _label(signal, noise))


def gen_circle_model(sigma, n, rng) -> LabeledSample:
    """Five-dimensional model whose signal angles fill the circle ``z1^2 + z2^2 = z3^2``.

    The signal is ``Y (G1, G2, |G|, 0, 0)`` with ``Y`` standard Fréchet and
    ``G`` standard bivariate normal.
    """
    sigma = check_positive(sigma, "sigma", allow_zero=True)
    n = check_count(n, "n")
    Y = sample_frechet(1.0, rng, n)
    G = rng.standard_normal((n, 2))
    eps = _contamination(rng, n, 5)
    signal = np.zeros((n, 5))
    signal[:, :2] = Y[:, None] * G
    signal[:, 2] = Y * np.hypot(G[:, 0], G[:, 1])
    noise = sigma * eps
    return LabeledSample(signal + noise, _label(signal, noise))


def gen_arch_pairs(spec: ArchSpec, rng) -> np.ndarray:
    """Run the ARCH recursion and return the lagged pairs ``(Y_{t-1}, Y_t)`` after burn-in.

    Returns
    -------
    ndarray of shape (length, 2)
    """
    steps = spec.burn_in + spec.length
    z2 = rng.standard_normal(steps) ** 2
    y = [float(spec.y0)]
    for z in z2.tolist():
        y.append((1.0 + y[-1]) * z)
    tail = np.asarray(y[spec.burn_in :])
    return np.column_stack([tail[:-1], tail[1:]])
