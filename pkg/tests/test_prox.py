import numpy as np
import pytest

from app.anova.grouped_transform import GroupedCoefficients
from app.anova.prox import (
    find_xi,
    group_thresholds,
    prox_group,
    prox_grouped,
    shrink_group_closed_form,
    weighted_norm,
    zero_threshold,
)
from app.anova.weights import WeightFunction
from app.core.errors import BracketError
from tests.conftest import random_coefficients


def _group_objective(x, y, w, lam):
    return 0.5 * np.sum(np.abs(x - y) ** 2) + lam * weighted_norm(x, w)


class TestWeights:

    def test_sobolev_value(self):
        omega = WeightFunction.sobolev(1.0)
        assert omega(np.array([0, 2, -3])) == pytest.approx(12.0)
        assert omega(np.zeros(4)) == 1.0
        assert WeightFunction.constant()(np.array([5, -7])) == 1.0

    def test_group_vector_matches_rule(self, index_set_factory):
        index_set = index_set_factory(3, 2, [6, 4])
        omega = WeightFunction.sobolev(1.5)
        np.testing.assert_allclose(omega.vector(index_set), omega(index_set.frequencies()))
        assert np.all(omega.vector(index_set) >= 1.0)

    def test_negative_smoothness(self):
        with pytest.raises(ValueError):
            WeightFunction.sobolev(-0.5)


class TestClosedForms:

    def test_shrink(self):
        y = np.array([1.0, -2.0, 4.0])
        np.testing.assert_allclose(shrink_group_closed_form(y, 0.5, np.ones(3)), y / 2)
        np.testing.assert_allclose(shrink_group_closed_form(y, 0.0, np.ones(3)), y)

    def test_shrink_minimizes_quadratic(self, rng):
        y = rng.standard_normal(5)
        w = 1.0 + rng.random(5) * 4
        xi = 0.7
        x = shrink_group_closed_form(y, xi, w)
        # gradient of 1/2 ||x - y||^2 + xi ||x||_W^2 vanishes
        np.testing.assert_allclose(x - y + 2 * xi * w * x, 0.0, atol=1e-14)

    def test_xi_unit_weights(self, rng):
        y = rng.standard_normal(6)
        lam = 0.3 * np.linalg.norm(y)
        xi = find_xi(y, np.ones(6), lam)
        assert xi == pytest.approx(1.0 / (np.linalg.norm(y) / lam - 1.0), rel=1e-10)

    def test_xi_single_entry(self):
        xi = find_xi(np.array([4.0]), np.array([2.0]), 1.0)
        assert xi == pytest.approx(1.0 / (4.0 * np.sqrt(2.0) - 2.0), rel=1e-10)

    def test_xi_precondition(self):
        y = np.array([1.0, 1.0])
        with pytest.raises(BracketError):
            find_xi(y, np.ones(2), zero_threshold(y, np.ones(2)))

    def test_xi_large_root(self):
        # threshold just below the zero threshold drives xi through the reciprocal bracket
        y = np.array([3.0, -1.0, 0.5])
        w = np.array([1.0, 4.0, 9.0])
        lam = 0.999 * zero_threshold(y, w)
        xi = find_xi(y, w, lam)
        assert xi > 1.0
        t = np.sum(w * y ** 2 * xi ** 2 / (1 + xi * w) ** 2)
        assert t == pytest.approx(lam ** 2, rel=1e-10)


class TestProx:

    def test_identity_at_zero_threshold(self, rng):
        y = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        np.testing.assert_array_equal(prox_group(y, np.ones(4), 0.0), y)

    def test_group_soft_threshold(self, rng):
        for _ in range(200):
            y = rng.standard_normal(rng.integers(1, 10))
            lam = rng.random() * 1.5 * np.linalg.norm(y)
            expected = max(0.0, 1.0 - lam / np.linalg.norm(y)) * y
            np.testing.assert_allclose(prox_group(y, np.ones(y.size), lam), expected, rtol=1e-12, atol=1e-12)

    def test_constant_weight_scales_the_threshold(self, rng):
        y = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        lam = 0.2 * np.linalg.norm(y)
        expected = (1.0 - 2.0 * lam / np.linalg.norm(y)) * y
        np.testing.assert_allclose(prox_group(y, np.full(5, 4.0), lam), expected, rtol=1e-12)

    def test_optimality_randomized(self, rng):
        omega = WeightFunction.sobolev(1.0)
        for case in range(1000):
            size = int(rng.integers(1, 9))
            y = rng.standard_normal(size)
            if case % 2:
                y = y + 1j * rng.standard_normal(size)
            frequencies = rng.integers(-6, 7, size=(size, 3))
            w = omega(frequencies) if case % 3 else 1.0 + 10 * rng.random(size)
            lam = rng.random() * 1.5 * zero_threshold(y, w)
            x = prox_group(y, w, lam)
            if np.any(x != 0):
                residual = x - y + lam / weighted_norm(x, w) * w * x
                assert np.linalg.norm(residual) <= 1e-8 * max(1.0, np.linalg.norm(y))
            else:
                assert zero_threshold(y, w) <= lam * (1 + 1e-10)

    def test_no_better_point_nearby(self, rng):
        omega = WeightFunction.sobolev(2.0)
        w = omega(np.array([[1, 0, 0], [2, 1, 0], [-3, 1, 1]]))
        y = np.array([2.0, -1.5, 0.8])
        lam = 0.4 * zero_threshold(y, w)
        x = prox_group(y, w, lam)
        best = _group_objective(x, y, w, lam)
        for _ in range(500):
            trial = x + 1e-3 * rng.standard_normal(3)
            assert _group_objective(trial, y, w, lam) >= best - 1e-12

    def test_non_expansive(self, rng):
        w = np.ones(5)
        for _ in range(100):
            a, b = rng.standard_normal(5), rng.standard_normal(5)
            lam = rng.random() * 2
            assert np.linalg.norm(prox_group(a, w, lam) - prox_group(b, w, lam)) <= np.linalg.norm(a - b) + 1e-12

    def test_grouped(self, rng, index_set_factory):
        index_set = index_set_factory(3, 2, [6, 4])
        omega = WeightFunction.sobolev(1.0)
        h = GroupedCoefficients(index_set, random_coefficients(rng, index_set))
        out = prox_grouped(h, 2.0, omega)
        for i in range(len(index_set.term_set)):
            expected = prox_group(h.group(i), omega.group(index_set, i), 2.0)
            np.testing.assert_allclose(out.group(i), expected)
        parallel = prox_grouped(h, 2.0, omega, threads=3)
        np.testing.assert_array_equal(parallel.values, out.values)

    def test_exempt_mean_and_scaling(self, index_set_factory):
        index_set = index_set_factory(3, 2, [6, 4])
        thresholds = group_thresholds(index_set, 2.0, exempt_mean=True, group_scaling=True)
        assert thresholds[0] == 0.0
        assert thresholds[1] == pytest.approx(2.0 * np.sqrt(5))
        assert thresholds[-1] == pytest.approx(2.0 * 3)
        h = GroupedCoefficients(index_set, np.full(index_set.total, 0.1 + 0j))
        out = prox_grouped(h, 50.0, WeightFunction.constant(), exempt_mean=True)
        assert out.values[0] == h.values[0]
        assert np.all(out.values[1:] == 0)
