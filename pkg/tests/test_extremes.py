import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from extremal_kpca.extremes import ExtremalSample, extract_extremes, polar_decompose
from extremal_kpca.generators import FactorModelSpec, gen_contaminated_lfm, make_rng

THREE = [[1.0, 0.0], [0.0, 2.0], [3.0, 0.0]]


class TestPolarDecompose:
    def test_three_four_five(self):
        r, y = polar_decompose([3.0, 4.0])
        assert r == 5.0
        np.testing.assert_allclose(y, [0.6, 0.8], rtol=1e-15)

    def test_unit_vector(self):
        r, y = polar_decompose([1.0, 0.0, 0.0])
        assert r == 1.0
        np.testing.assert_array_equal(y, [1.0, 0.0, 0.0])

    def test_all_ones(self):
        r, y = polar_decompose([1.0, 1.0, 1.0, 1.0])
        assert r == 2.0
        np.testing.assert_array_equal(y, [0.5] * 4)

    def test_zero_radius(self):
        with pytest.raises(ValueError, match="zero radius"):
            polar_decompose([0.0, 0.0])


class TestExtract:
    def test_top_k(self):
        s = extract_extremes(THREE, top_k=2)
        np.testing.assert_array_equal(s.source_indices, [1, 2])
        np.testing.assert_allclose(s.angles, [[0.0, 1.0], [1.0, 0.0]])
        assert s.threshold == 1.0

    def test_threshold(self):
        s = extract_extremes(THREE, threshold=2.5)
        np.testing.assert_array_equal(s.source_indices, [2])
        np.testing.assert_allclose(s.angles, [[1.0, 0.0]])

    def test_top_k_all_rows_threshold_zero(self):
        s = extract_extremes(THREE, top_k=3)
        assert s.threshold == 0.0
        assert len(s) == 3

    def test_top_k_too_large(self):
        with pytest.raises(ValueError, match="exceeds"):
            extract_extremes(THREE, top_k=4)

    def test_no_exceedances(self):
        with pytest.raises(ValueError, match="no exceedances"):
            extract_extremes(THREE, threshold=10.0)

    def test_exactly_one_rule(self):
        with pytest.raises(ValueError, match="exactly one"):
            extract_extremes(THREE)
        with pytest.raises(ValueError, match="exactly one"):
            extract_extremes(THREE, top_k=1, threshold=1.0)

    def test_tie_at_boundary_is_rejected(self):
        with pytest.raises(ValueError, match="tie"):
            extract_extremes([[2.0, 0.0], [0.0, 2.0], [1.0, 0.0]], top_k=1)

    def test_tie_inside_selection_keeps_both(self):
        s = extract_extremes([[2.0, 0.0], [0.0, 2.0], [1.0, 0.0]], top_k=2)
        np.testing.assert_array_equal(s.source_indices, [0, 1])

    def test_labels_carried(self):
        s = extract_extremes(THREE, top_k=2, labels=["a", "b", "c"])
        np.testing.assert_array_equal(s.labels, ["b", "c"])

    def test_lfm_top_200(self):
        data = gen_contaminated_lfm(FactorModelSpec(sigma=1.0), 10_000, make_rng(5))
        s = extract_extremes(data.points, top_k=200)
        assert len(s) == 200
        assert np.all(np.abs(np.linalg.norm(s.angles, axis=1) - 1) <= 1e-12)
        assert np.all(s.radii > s.threshold)
        assert np.all(np.diff(s.source_indices) > 0)

    def test_top_n_matches_threshold_below_min(self, rng):
        X = rng.standard_normal((50, 3))
        a = extract_extremes(X, top_k=50)
        b = extract_extremes(X, threshold=float(a.radii.min()) * (1 - 1e-9))
        np.testing.assert_array_equal(a.source_indices, b.source_indices)

    def test_sample_invariants(self):
        with pytest.raises(ValueError, match="no exceedances"):
            ExtremalSample(np.zeros((0, 2)), np.zeros(0), 1.0, np.zeros(0, int))
        with pytest.raises(ValueError, match="exceed"):
            ExtremalSample(np.array([[1.0, 0.0]]), np.array([0.5]), 1.0, np.array([0]))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3), st.integers(1, 30))
def test_scale_equivariance(seed, c, k):
    X = np.random.default_rng(seed).standard_normal((30, 3))
    a = extract_extremes(X, top_k=k)
    b = extract_extremes(c * X, top_k=k)
    np.testing.assert_array_equal(a.source_indices, b.source_indices)
    np.testing.assert_allclose(a.angles, b.angles, atol=1e-14)
