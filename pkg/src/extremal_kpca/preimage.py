"""Sphere-constrained preimages by projected gradient ascent."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._validation import (
    UNIT_NORM_TOL,
    as_points,
    as_vector,
    check_count,
    check_positive,
    check_unit_rows,
)
from .kpca import (
    KpcaModel,
    PreimageObjective,
    objective_coefficients,
    objective_gradient,
    objective_increment,
    objective_value,
)

MAX_HALVINGS = 30
STEP_RULES = ("lipschitz", "fixed")


class PreimageDivergenceError(FloatingPointError):
    """The objective or its gradient became non-finite."""

    def __init__(self, iteration):
        self.iteration = iteration
        super().__init__(f"non-finite objective or gradient at iteration {iteration}")


@dataclass(frozen=True)
class PgdSettings:
    """Projected gradient ascent settings.

    ``step_rule="lipschitz"`` starts every step from ``1 / (2 |c|)`` (Gaussian
    kernel only); ``"fixed"`` starts from ``step_size``. Either way the step is
    halved, at most 30 times, until the objective does not decrease.
    """

    max_iterations: int = 500
    stationarity_tol: float = 1e-8
    step_rule: str = "lipschitz"
    step_size: float = 1.0
    record_trace: bool = False

    def __post_init__(self):
        check_count(self.max_iterations, "max_iterations")
        check_positive(self.stationarity_tol, "stationarity_tol")
        check_positive(self.step_size, "step_size")
        if self.step_rule not in STEP_RULES:
            raise ValueError(f"step_rule must be one of {STEP_RULES}, got {self.step_rule!r}")


@dataclass(frozen=True)
class PreimageResult:
    preimage: np.ndarray
    iterations: int
    final_objective: float
    converged: bool
    gradient_norm: float
    step_fallback: bool = False
    trace: np.ndarray | None = field(default=None, repr=False)


def project_to_sphere(x):
    """Nearest point of the unit sphere, ``x / |x|``."""
    x = np.asarray(x, dtype=np.float64)
    r = np.linalg.norm(x)
    if r == 0.0:
        raise ValueError("projection undefined at origin")
    return x / r


def lipschitz_step_size(obj: PreimageObjective) -> float:
    """Step ``1 / (2 |sum_k beta_k v_k|)`` guaranteeing ascent for the Gaussian kernel.

    ``sum_k beta_k v_k`` is the collapsed coefficient vector ``c``. Raises
    ``ValueError`` for other kernels or when ``|c|`` is below ``1e-12`` times
    the norm of the query's kernel row (zero up to rounding).
    """
    if obj.spec.family != "gaussian":
        raise ValueError("the Lipschitz step is derived for the Gaussian kernel only")
    norm = float(np.linalg.norm(obj.model.components @ obj.projections))
    # c is a projection of the kernel row of w, so that row bounds |c|
    row = float(np.linalg.norm(obj.spec(obj.query - obj.points)))
    if not norm > 1e-12 * row:
        raise ValueError("zero coefficient norm; Lipschitz step undefined")
    return 1.0 / (2.0 * norm)


def riemannian_gradient(v, g):
    return g - (v @ g) * v


def solve_preimage(obj: PreimageObjective, start=None, settings: PgdSettings | None = None) -> PreimageResult:
    """Maximise the preimage objective over the unit sphere.

    Iterates ``v <- P(v + eta grad f(v))`` with backtracking on ``eta`` until
    the Riemannian gradient ``|g - (v.g) v|`` drops below the tolerance, no
    ascent step can be found, or the iteration budget runs out. Steps are
    accepted on the exact increment of :func:`objective_increment`, and the
    reported objective (and trace) accumulates those increments from the
    starting value, so it never decreases.

    Parameters
    ----------
    obj : PreimageObjective
    start : array-like of shape (d,), optional
        Starting point on the sphere; defaults to the query itself.
    settings : PgdSettings, optional
    """
    settings = settings or PgdSettings()
    v = obj.query if start is None else as_vector(start, name="start")
    check_unit_rows(v, tol=UNIT_NORM_TOL, name="start")
    v = project_to_sphere(v)

    fallback = False
    if settings.step_rule == "lipschitz":
        try:
            base_step = lipschitz_step_size(obj)
        except ValueError:
            base_step, fallback = 1.0, True
    else:
        base_step = settings.step_size

    f = float(objective_value(obj, v))
    trace = [f] if settings.record_trace else None
    iterations = 0
    converged = False
    gnorm = np.inf
    for it in range(settings.max_iterations + 1):
        g = objective_gradient(obj, v)
        if not (np.isfinite(f) and np.all(np.isfinite(g))):
            raise PreimageDivergenceError(it)
        gnorm = float(np.linalg.norm(riemannian_gradient(v, g)))
        if gnorm <= settings.stationarity_tol:
            converged = True
            break
        if it == settings.max_iterations:
            break
        step = base_step
        for _ in range(MAX_HALVINGS + 1):
            candidate = project_to_sphere(v + step * g)
            gain = objective_increment(obj, v, candidate)
            if not np.isfinite(gain):
                raise PreimageDivergenceError(it + 1)
            if gain >= 0.0:
                break
            step *= 0.5
        else:
            break  # no ascent direction at machine precision
        if np.array_equal(candidate, v):
            break
        v, f = candidate, f + gain
        iterations += 1
        if trace is not None:
            trace.append(f)

    return PreimageResult(
        preimage=v,
        iterations=iterations,
        final_objective=f,
        converged=converged,
        gradient_norm=gnorm,
        step_fallback=fallback,
        trace=None if trace is None else np.asarray(trace),
    )


def batch_preimages(model: KpcaModel, queries, settings: PgdSettings | None = None, *, n_jobs=1):
    """Preimages of many queries, each started at the query itself.

    Returns
    -------
    results : list of PreimageResult or None
        In query order; ``None`` where the solve failed.
    errors : list of (int, Exception)
        Index and exception of every failed query.
    """
    Q = as_points(queries, name="queries", min_samples=0)
    settings = settings or PgdSettings()

    def one(w):
        try:
            return solve_preimage(objective_coefficients(model, w), None, settings), None
        except (ValueError, FloatingPointError) as exc:
            return None, exc

    if n_jobs is None or n_jobs == 1 or len(Q) < 2:
        outcomes = [one(w) for w in Q]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            outcomes = list(pool.map(one, Q))
    results = [r for r, _ in outcomes]
    errors = [(i, e) for i, (_, e) in enumerate(outcomes) if e is not None]
    return results, errors
