"""Independent reference computations used by the tests.

Each oracle deliberately takes a different route from the library code it
checks: explicit double loops instead of collapsed coefficients, grids instead
of gradient ascent, random search instead of an SVD.
"""

import math

import numpy as np
from scipy.stats import ortho_group


def kernel_value(family, gamma, x, y):
    dist = math.sqrt(sum((a - b) ** 2 for a, b in zip(x, y)))
    if family == "gaussian":
        return math.exp(-gamma * dist**2)
    return math.exp(-gamma * dist)


def kernel_matrix_loops(family, gamma, points):
    n = len(points)
    return np.array([[kernel_value(family, gamma, points[i], points[j]) / n for j in range(n)] for i in range(n)])


def double_sum_objective(family, gamma, points, eigvecs, m, w, v):
    """sum_k [sum_j v_kj R(w - t_j)] [sum_j v_kj R(v - t_j)] with plain loops."""
    total = 0.0
    n = len(points)
    for k in range(m):
        beta = sum(eigvecs[j, k] * kernel_value(family, gamma, w, points[j]) for j in range(n))
        inner = sum(eigvecs[j, k] * kernel_value(family, gamma, v, points[j]) for j in range(n))
        total += beta * inner
    return total


def finite_difference_gradient(f, v, h=1e-6):
    v = np.asarray(v, dtype=float)
    g = np.zeros_like(v)
    for i in range(v.size):
        e = np.zeros_like(v)
        e[i] = h
        g[i] = (f(v + e) - f(v - e)) / (2 * h)
    return g


def circle_grid_maximum(f, points=10_000):
    """Maximum of f over an equispaced grid on the unit circle and its argmax."""
    phi = np.linspace(0.0, 2 * np.pi, points, endpoint=False)
    grid = np.column_stack([np.cos(phi), np.sin(phi)])
    values = np.array([f(p) for p in grid])
    i = int(np.argmax(values))
    return values[i], grid[i]


def random_orthogonal(m, rng):
    return ortho_group.rvs(m, random_state=rng) if m > 1 else np.array([[rng.choice([-1.0, 1.0])]])


def hill_reference(x, k):
    """Hill estimator written directly from order statistics."""
    xs = sorted(x, reverse=True)
    return k / sum(math.log(xs[i]) - math.log(xs[k]) for i in range(k))
