import numpy as np
import pytest
from conftest import unit_rows
from oracles import (
    circle_grid_maximum,
    double_sum_objective,
    finite_difference_gradient,
)

from extremal_kpca.kernels import KernelSpec
from extremal_kpca.kpca import (
    KpcaModel,
    fit_kpca,
    objective_coefficients,
    objective_gradient,
    objective_increment,
    objective_value,
)


def _model(rng, n=12, d=3, m=3, family="gaussian", gamma=1.0):
    return fit_kpca(KernelSpec(family, gamma), unit_rows(rng, n, d), m)


class TestFit:
    def test_two_identical_points(self):
        model = fit_kpca(KernelSpec(), [[1.0, 0.0], [1.0, 0.0]], 1)
        np.testing.assert_allclose(model.eigenpairs.eigenvalues, [1.0, 0.0], atol=1e-15)

    def test_two_atoms_leading_eigenvalue(self):
        s = np.array([[1.0, 0.0], [0.0, 1.0]])
        rho = np.exp(-2.0)
        model = fit_kpca(KernelSpec(), s, 1)
        assert model.eigenpairs.eigenvalues[0] == pytest.approx((1 + rho) / 2, rel=1e-14)

    def test_rank_bounds(self, rng):
        with pytest.raises(ValueError):
            fit_kpca(KernelSpec(), unit_rows(rng, 3, 2), 4)
        with pytest.raises(ValueError):
            fit_kpca(KernelSpec(), unit_rows(rng, 3, 2), 0)

    def test_fingerprint(self, rng):
        model = _model(rng)
        assert model.verify()
        forged = KpcaModel(KernelSpec("gaussian", 2.0), model.training_points, model.eigenpairs, 2,
                           fingerprint=model.fingerprint)
        assert not forged.verify()

    def test_with_rank(self, rng):
        model = _model(rng)
        assert model.with_rank(5).m == 5
        assert model.with_rank(5).verify()


class TestObjective:
    @pytest.mark.parametrize("family", ["gaussian", "exponential"])
    @pytest.mark.parametrize("m", [1, 3, 12])
    def test_matches_double_sum_oracle(self, rng, family, m):
        model = _model(rng, m=m, family=family, gamma=0.8)
        w = unit_rows(rng, 1, 3)[0]
        obj = objective_coefficients(model, w)
        pts = model.training_points.tolist()
        V = model.eigenpairs.eigenvectors
        for v in unit_rows(rng, 50, 3):
            expected = double_sum_objective(family, 0.8, pts, V, m, w.tolist(), v.tolist())
            assert objective_value(obj, v) == pytest.approx(expected, abs=1e-10)

    def test_zero_coefficients(self, rng):
        model = _model(rng)
        obj = objective_coefficients(model, unit_rows(rng, 1, 3)[0])
        zero = type(obj)(model, obj.query, np.zeros(model.n), obj.projections)
        assert objective_value(zero, obj.query) == 0.0

    def test_single_point(self):
        model = fit_kpca(KernelSpec(), [[0.0, 1.0]], 1)
        w = np.array([0.6, 0.8])
        obj = objective_coefficients(model, w)
        r = np.exp(-np.sum((w - [0, 1]) ** 2))
        np.testing.assert_allclose(obj.coefficients, [r], rtol=1e-14)
        assert objective_value(obj, [0.0, 1.0]) == pytest.approx(r, rel=1e-14)
        _, arg = circle_grid_maximum(lambda v: objective_value(obj, v))
        np.testing.assert_allclose(arg, [0.0, 1.0], atol=1e-3)

    def test_stack_evaluation(self, rng):
        model = _model(rng)
        obj = objective_coefficients(model, unit_rows(rng, 1, 3)[0])
        V = unit_rows(rng, 5, 3)
        np.testing.assert_allclose(objective_value(obj, V), [objective_value(obj, v) for v in V], rtol=1e-14)

    def test_bounded_by_l1_norm(self, rng):
        model = _model(rng)
        obj = objective_coefficients(model, unit_rows(rng, 1, 3)[0])
        bound = np.abs(obj.coefficients).sum()
        assert np.all(np.abs(objective_value(obj, unit_rows(rng, 200, 3))) <= bound + 1e-12)

    def test_query_must_be_unit(self, rng):
        with pytest.raises(ValueError, match="unit sphere"):
            objective_coefficients(_model(rng), [1.0, 1.0, 0.0])

    def test_query_dimension(self, rng):
        with pytest.raises(ValueError, match="dimension"):
            objective_coefficients(_model(rng), [1.0, 0.0])

    def test_invariant_under_eigenspace_rotation(self, rng):
        model = _model(rng, n=15, m=4)
        lam = model.eigenpairs.eigenvalues
        assert lam[3] - lam[4] > 1e-8
        Q = np.linalg.qr(rng.standard_normal((4, 4)))[0]
        V = model.eigenpairs.eigenvectors.copy()
        V[:, :4] = V[:, :4] @ Q
        rotated = KpcaModel(model.spec, model.training_points, type(model.eigenpairs)(lam, V), 4)
        w = unit_rows(rng, 1, 3)[0]
        a, b = objective_coefficients(model, w), objective_coefficients(rotated, w)
        for v in unit_rows(rng, 20, 3):
            assert objective_value(a, v) == pytest.approx(objective_value(b, v), abs=1e-12)

    def test_full_rank_reconstruction_at_training_point(self, rng):
        model = _model(rng, n=8, m=8)
        t0 = model.training_points[0]
        obj = objective_coefficients(model, t0)
        # all eigenvectors kept: c equals the kernel row of t0, so f(t0) is its squared norm
        row = model.spec(t0 - model.training_points)
        assert objective_value(obj, t0) == pytest.approx(row @ row, rel=1e-12)

    def test_eigenvalue_weighting_flag(self, rng):
        pts = unit_rows(rng, 10, 3)
        plain = fit_kpca(KernelSpec(), pts, 3)
        weighted = fit_kpca(KernelSpec(), pts, 3, weight_by_eigenvalues=True)
        w = pts[0]
        a, b = objective_coefficients(plain, w), objective_coefficients(weighted, w)
        V = plain.components
        np.testing.assert_allclose(b.coefficients, V @ (a.projections * plain.eigenpairs.eigenvalues[:3]))


class TestGradient:
    @pytest.mark.parametrize("family", ["gaussian", "exponential"])
    def test_finite_differences(self, rng, family):
        model = _model(rng, family=family, gamma=1.5)
        obj = objective_coefficients(model, unit_rows(rng, 1, 3)[0])
        for v in rng.standard_normal((5, 3)):
            fd = finite_difference_gradient(lambda x: objective_value(obj, x), v)
            g = objective_gradient(obj, v)
            assert np.linalg.norm(g - fd) <= 1e-5 * np.linalg.norm(fd)

    def test_single_point_stationary(self):
        model = fit_kpca(KernelSpec(), [[0.0, 1.0]], 1)
        obj = objective_coefficients(model, [1.0, 0.0])
        np.testing.assert_array_equal(objective_gradient(obj, [0.0, 1.0]), [0.0, 0.0])

    def test_linear_in_coefficients(self, rng):
        model = _model(rng)
        obj = objective_coefficients(model, unit_rows(rng, 1, 3)[0])
        doubled = type(obj)(model, obj.query, 2 * obj.coefficients, obj.projections)
        v = unit_rows(rng, 1, 3)[0]
        np.testing.assert_allclose(objective_gradient(doubled, v), 2 * objective_gradient(obj, v), rtol=1e-14)


class TestIncrement:
    @pytest.mark.parametrize("family", ["gaussian", "exponential"])
    def test_matches_direct_difference(self, rng, family):
        model = _model(rng, family=family)
        obj = objective_coefficients(model, unit_rows(rng, 1, 3)[0])
        for _ in range(20):
            v, w = unit_rows(rng, 2, 3)
            direct = objective_value(obj, w) - objective_value(obj, v)
            assert objective_increment(obj, v, w) == pytest.approx(direct, abs=1e-12)

    def test_tiny_step_sign_against_extended_precision(self, rng):
        import mpmath

        mpmath.mp.dps = 50
        model = _model(rng, n=6)
        obj = objective_coefficients(model, unit_rows(rng, 1, 3)[0])
        v = unit_rows(rng, 1, 3)[0]
        w = v + 1e-9 * rng.standard_normal(3)
        w = w / np.linalg.norm(w)

        def exact(x):
            x = [mpmath.mpf(float(c)) for c in x]
            nx = mpmath.sqrt(sum(c * c for c in x))
            x = [c / nx for c in x]
            total = mpmath.mpf(0)
            for cj, t in zip(obj.coefficients, model.training_points):
                total += mpmath.mpf(float(cj)) * mpmath.e ** (-sum((a - mpmath.mpf(float(b))) ** 2 for a, b in zip(x, t)))
            return total

        truth = float(exact(w) - exact(v))
        assert objective_increment(obj, v, w) == pytest.approx(truth, rel=1e-6, abs=1e-22)
