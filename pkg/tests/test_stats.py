import numpy as np
import pytest
from oracles import hill_reference
from scipy import stats as sps

from extremal_kpca.generators import make_rng, sample_pareto
from extremal_kpca.kernels import EigenPairs
from extremal_kpca.stats import (
    arch_spectral_density,
    hill_estimator,
    kde_gaussian,
    ks_statistic,
    local_maxima,
    scree_components,
    scree_data,
    silverman_bandwidth,
)


class TestBandwidth:
    def test_matches_formula(self, rng):
        x = rng.standard_normal(500)
        sd = np.std(x, ddof=1)
        iqr = np.subtract(*np.quantile(x, [0.75, 0.25]))
        assert silverman_bandwidth(x) == pytest.approx(0.9 * min(sd, iqr / 1.34) * 500 ** -0.2, rel=1e-14)

    def test_zero_iqr_uses_sd(self):
        x = np.array([0.0] * 10 + [1.0])
        assert silverman_bandwidth(x) == pytest.approx(0.9 * np.std(x, ddof=1) * 11 ** -0.2)

    def test_constant_data(self):
        with pytest.raises(ValueError, match="zero bandwidth"):
            silverman_bandwidth(np.ones(5))

    def test_equal_weights_agree_with_unweighted_quantiles(self, rng):
        x = rng.standard_normal(2000)
        h = silverman_bandwidth(x, np.ones_like(x))
        assert h == pytest.approx(silverman_bandwidth(x), rel=0.01)


class TestKde:
    def test_single_point_is_normal_pdf(self):
        grid = np.linspace(-3, 3, 13)
        est = kde_gaussian([0.0], grid, bandwidth=1.0)
        np.testing.assert_allclose(est.density, sps.norm.pdf(grid), rtol=1e-14)

    def test_symmetric_data_gives_symmetric_density(self):
        grid = np.linspace(-4, 4, 81)
        est = kde_gaussian([-1.0, 1.0], grid, bandwidth=0.5)
        np.testing.assert_allclose(est.density, est.density[::-1], rtol=1e-13)

    def test_normal_sample_accuracy(self):
        x = make_rng(1).standard_normal(20_000)
        grid = np.linspace(-4, 4, 161)
        est = kde_gaussian(x, grid)
        assert np.abs(est.density - sps.norm.pdf(grid)).max() <= 0.02
        assert est.integral() == pytest.approx(1.0, abs=1e-3)

    def test_weights_shift_mass(self):
        grid = np.linspace(-3, 3, 61)
        est = kde_gaussian([-1.0, 1.0], grid, weights=[0.0, 1.0], bandwidth=0.3)
        assert grid[np.argmax(est.density)] == pytest.approx(1.0)

    def test_bad_weights(self):
        with pytest.raises(ValueError):
            kde_gaussian([0.0, 1.0], [0.0], weights=[-1.0, 2.0])


class TestLocalMaxima:
    @pytest.mark.parametrize(
        "values, expected",
        [([0, 1, 0], [1]), ([0, 1, 0, 2, 0], [1, 3]), ([0, 1, 1, 0], [1]), ([1, 2, 3], []), ([0, 1, 1, 2, 0], [3])],
    )
    def test_examples(self, values, expected):
        assert local_maxima(np.array(values, dtype=float)) == expected

    def test_short_input(self):
        with pytest.raises(ValueError):
            local_maxima([1.0, 2.0])


class TestScree:
    def test_data_one_based(self):
        pairs = EigenPairs(np.array([3.0, 2.0, 1.0]), np.eye(3))
        assert scree_data(pairs, 2) == [(1, 3.0), (2, 2.0)]
        with pytest.raises(ValueError):
            scree_data(pairs, 4)

    @pytest.mark.parametrize(
        "lam, expected",
        [([1.0, 0.9, 0.3, 0.1], 2), ([1.0, 0.1], 1), ([1.0, 0.0, 0.0], 1), ([1.0, 0.9, 0.8], 3)],
    )
    def test_components(self, lam, expected):
        assert scree_components(lam) == expected

    def test_cap(self):
        assert scree_components(np.linspace(1, 0.5, 30)) == 10


class TestKs:
    def test_identical_samples(self):
        x = np.arange(10.0)
        assert ks_statistic(x, x) == 0.0

    def test_disjoint_samples(self):
        assert ks_statistic([0.0, 1.0], [5.0, 6.0]) == 1.0

    def test_against_cdf(self):
        assert ks_statistic([0.5], sps.uniform.cdf) == pytest.approx(0.5)

    def test_empty(self):
        with pytest.raises(ValueError):
            ks_statistic([], sps.norm.cdf)


class TestHill:
    def test_matches_reference(self, rng):
        x = rng.pareto(2.0, 500) + 1
        assert hill_estimator(x, 50) == pytest.approx(hill_reference(x.tolist(), 50), rel=1e-12)

    def test_scale_invariant_and_square_halves(self, rng):
        x = sample_pareto(1.5, rng, 5000)
        h = hill_estimator(x, 200)
        assert hill_estimator(7.0 * x, 200) == pytest.approx(h, rel=1e-10)
        assert hill_estimator(x**2, 200) == pytest.approx(h / 2, rel=1e-10)

    def test_pareto_recovers_index(self):
        x = sample_pareto(2.0, make_rng(4), 200_000)
        assert hill_estimator(x, 5_000) == pytest.approx(2.0, rel=0.05)

    def test_invalid(self):
        with pytest.raises(ValueError):
            hill_estimator([1.0, -1.0, 2.0], 1)
        with pytest.raises(ValueError):
            hill_estimator([1.0, 2.0], 2)


class TestArchDensity:
    def test_two_modes_and_unit_mass(self):
        grid = np.linspace(0, np.pi / 2, 202)[1:-1]
        est = arch_spectral_density(200_000, grid, make_rng(2))
        assert len(local_maxima(est)) == 2
        # the reflection-free KDE loses a little mass at the interval ends
        assert est.integral() == pytest.approx(1.0, abs=0.1)

    def test_minimum_draws(self):
        with pytest.raises(ValueError):
            arch_spectral_density(10, np.linspace(0, 1, 5), make_rng(0))
