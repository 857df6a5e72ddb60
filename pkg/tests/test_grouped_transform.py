import numpy as np
import pytest

from app.anova.grouped_index import Basis, GroupedIndexSet, TermSet, build_term_superset
from app.anova.grouped_transform import (
    GroupedCoefficients,
    NodeSet,
    TransformMethod,
    TransformPlan,
    adjoint,
    direct_group_forward,
    fast_group_forward,
    forward,
)
from app.anova.window import Window, axis_stencil, nfft_adjoint, nfft_forward
from app.core.errors import NodeDomainError, PlanMismatchError
from tests.conftest import random_coefficients


def _relative(a, b):
    return np.max(np.abs(a - b)) / np.max(np.abs(b))


INSTANCES = [
    (2, 2, [8, 6]),
    (3, 2, [6, 4]),
    (4, 3, [10, 6, 4]),
    (6, 2, [16, 6]),
]


class TestDenseOracle:

    @pytest.mark.parametrize("basis", [Basis.EXPONENTIAL, Basis.COSINE])
    @pytest.mark.parametrize("d, d_s, bandwidths", INSTANCES)
    def test_direct_matches_dense(self, rng, index_set_factory, basis, d, d_s, bandwidths):
        index_set = index_set_factory(d, d_s, bandwidths, basis)
        plan = TransformPlan.create(rng.random((120, d)), index_set, method=TransformMethod.DIRECT)
        F = plan.dense_matrix()
        f = random_coefficients(rng, index_set)
        y = rng.standard_normal(plan.M)
        np.testing.assert_allclose(plan.forward_array(f), F @ f, rtol=1e-10, atol=1e-10 * np.abs(F @ f).max())
        np.testing.assert_allclose(plan.adjoint_array(y), F.conj().T @ y, rtol=1e-10,
                                   atol=1e-10 * np.abs(F.conj().T @ y).max())

    @pytest.mark.parametrize("basis", [Basis.EXPONENTIAL, Basis.COSINE])
    @pytest.mark.parametrize("d, d_s, bandwidths", INSTANCES)
    def test_fast_matches_dense(self, rng, index_set_factory, basis, d, d_s, bandwidths):
        index_set = index_set_factory(d, d_s, bandwidths, basis)
        plan = TransformPlan.create(rng.random((150, d)), index_set, method=TransformMethod.FAST,
                                    oversampling=2.0, window_cutoff=6)
        F = plan.dense_matrix()
        f = random_coefficients(rng, index_set)
        y = rng.standard_normal(plan.M)
        assert _relative(plan.forward_array(f), F @ f) < 1e-7
        assert _relative(plan.adjoint_array(y), F.conj().T @ y) < 1e-7

    @pytest.mark.parametrize("method", [TransformMethod.DIRECT, TransformMethod.FAST])
    def test_adjointness(self, rng, index_set_factory, method):
        index_set = index_set_factory(5, 3, [12, 6, 4])
        plan = TransformPlan.create(rng.random((80, 5)), index_set, method=method)
        f = random_coefficients(rng, index_set)
        y = rng.standard_normal(80) + 1j * rng.standard_normal(80)
        lhs = np.vdot(y, plan.forward_array(f))
        rhs = np.vdot(plan.adjoint_array(y), f)
        assert abs(lhs - rhs) <= 1e-7 * abs(lhs)


class TestWindow:

    def test_one_dimensional_nfft(self, rng):
        window = Window("kaiser_bessel", 2.0, 6)
        x = rng.random(200)
        values = np.array([k for k in range(-16, 16) if k != 0])
        c = rng.standard_normal(values.size) + 1j * rng.standard_normal(values.size)
        n = window.grid_size(32)
        stencil = axis_stencil(x, n, window)
        exact = np.exp(2j * np.pi * np.outer(x, values)) @ c
        assert _relative(nfft_forward([stencil], c, values, n, window), exact) < 1e-9
        y = rng.standard_normal(200)
        exact_adjoint = np.exp(-2j * np.pi * np.outer(values, x)) @ y
        assert _relative(nfft_adjoint([stencil], y, values, n, window), exact_adjoint) < 1e-9

    def test_gaussian_window_is_coarser(self, rng):
        window = Window("gaussian", 2.0, 6)
        x = rng.random(100)
        values = np.array([k for k in range(-8, 8) if k != 0])
        c = rng.standard_normal(values.size)
        n = window.grid_size(16)
        exact = np.exp(2j * np.pi * np.outer(x, values)) @ c
        assert _relative(nfft_forward([axis_stencil(x, n, window)], c, values, n, window), exact) < 1e-3

    def test_grid_size(self):
        window = Window("kaiser_bessel", 2.0, 6)
        assert window.grid_size(26) == 52
        assert window.grid_size(4) == 14
        assert Window("kaiser_bessel", 1.5, 2).grid_size(25) == 38

    def test_invalid_window(self):
        with pytest.raises(ValueError):
            Window("boxcar", 2.0, 6)
        with pytest.raises(ValueError):
            Window("gaussian", 1.0, 6)


class TestPlan:

    def test_constant_group(self, rng):
        index_set = GroupedIndexSet(TermSet.from_terms(3, [()]), (1,))
        plan = TransformPlan.create(rng.random((10, 3)), index_set)
        np.testing.assert_allclose(plan.forward_array(np.array([2.5 + 1j])), np.full(10, 2.5 + 1j))
        y = rng.standard_normal(10)
        np.testing.assert_allclose(plan.adjoint_array(y), [y.sum()])

    def test_exponential_nodes_wrap(self):
        nodes = NodeSet(np.array([[1.0, -0.25], [0.5, 2.75]]))
        np.testing.assert_allclose(nodes.nodes, [[0.0, 0.75], [0.5, 0.75]])

    def test_cosine_nodes_checked(self):
        NodeSet(np.array([[0.0, 1.0]]), Basis.COSINE)
        with pytest.raises(NodeDomainError):
            NodeSet(np.array([[0.5, 1.5]]), Basis.COSINE)

    def test_mismatches(self, rng, index_set_factory):
        index_set = index_set_factory(3, 2, [6, 4])
        with pytest.raises(PlanMismatchError):
            TransformPlan(NodeSet(rng.random((5, 3)), Basis.COSINE), index_set)
        with pytest.raises(PlanMismatchError):
            TransformPlan.create(rng.random((5, 2)), index_set)
        plan = TransformPlan.create(rng.random((5, 3)), index_set)
        with pytest.raises(PlanMismatchError):
            plan.forward_array(np.zeros(index_set.total + 1))
        with pytest.raises(PlanMismatchError):
            plan.adjoint_array(np.zeros(4))

    def test_auto_dispatch(self, rng, index_set_factory):
        index_set = index_set_factory(2, 2, [64, 6])
        plan = TransformPlan.create(rng.random((20, 2)), index_set, window_cutoff=6)
        assert plan.group_method(0) is None
        assert plan.group_method(1) is TransformMethod.FAST
        assert plan.group_method(3) is TransformMethod.DIRECT

    def test_threads_are_deterministic(self, rng, index_set_factory):
        index_set = index_set_factory(5, 2, [20, 6])
        nodes = rng.random((60, 5))
        f = random_coefficients(rng, index_set)
        serial = TransformPlan.create(nodes, index_set, threads=1)
        parallel = TransformPlan.create(nodes, index_set, threads=4)
        np.testing.assert_array_equal(serial.forward_array(f), parallel.forward_array(f))
        y = rng.standard_normal(60)
        np.testing.assert_array_equal(serial.adjoint_array(y), parallel.adjoint_array(y))

    def test_grouped_coefficients(self, rng, index_set_factory):
        index_set = index_set_factory(3, 2, [6, 4])
        plan = TransformPlan.create(rng.random((30, 3)), index_set)
        f = GroupedCoefficients(index_set, random_coefficients(rng, index_set))
        np.testing.assert_allclose(forward(plan, f), plan.forward_array(f.values))
        back = adjoint(plan, rng.standard_normal(30))
        assert back[(1, 2)].shape == (9,)
        assert GroupedCoefficients.zeros(index_set).values.dtype == complex

    def test_group_contributions_add_up(self, rng, index_set_factory):
        index_set = index_set_factory(4, 2, [10, 4])
        plan = TransformPlan.create(rng.random((40, 4)), index_set)
        f = random_coefficients(rng, index_set)
        parts = sum(plan.group_forward(i, f) for i in range(len(index_set.term_set)))
        np.testing.assert_allclose(parts, plan.forward_array(f), rtol=1e-10, atol=1e-10)

    def test_operator(self, rng, index_set_factory):
        index_set = index_set_factory(3, 2, [6, 4], Basis.COSINE)
        plan = TransformPlan.create(rng.random((30, 3)), index_set)
        operator = plan.as_operator()
        f = rng.standard_normal(index_set.total)
        y = rng.standard_normal(30)
        np.testing.assert_allclose(operator.matvec(f), plan.forward_array(f))
        np.testing.assert_allclose(operator.rmatvec(y), plan.adjoint_array(y))


def _random_instance(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 7))
    d_s = int(rng.integers(1, min(3, d) + 1))
    limits = (16, 8, 6)[:d_s]
    bandwidths = [2 * int(rng.integers(1, limit // 2 + 1)) for limit in limits]
    basis = Basis.COSINE if rng.random() < 0.5 else Basis.EXPONENTIAL
    index_set = GroupedIndexSet.from_orders(build_term_superset(d, d_s), bandwidths, basis)
    return rng, index_set, rng.random((int(rng.integers(20, 201)), d))


class TestRandomizedInstances:

    @pytest.mark.parametrize("seed", range(100))
    def test_against_dense(self, seed):
        rng, index_set, nodes = _random_instance(seed)
        f = random_coefficients(rng, index_set)
        y = rng.standard_normal(nodes.shape[0])
        for method, tol in ((TransformMethod.DIRECT, 1e-10), (TransformMethod.FAST, 1e-7)):
            plan = TransformPlan.create(nodes, index_set, method=method, oversampling=2.0, window_cutoff=6)
            F = plan.dense_matrix()
            forward_values = plan.forward_array(f)
            adjoint_values = plan.adjoint_array(y)
            assert _relative(forward_values, F @ f) < tol
            assert _relative(adjoint_values, F.conj().T @ y) < tol
            lhs = np.vdot(y, forward_values)
            assert abs(lhs - np.vdot(adjoint_values, f)) <= tol * np.linalg.norm(y) * np.linalg.norm(forward_values)


class TestFastGroupForward:

    def test_error_decreases_with_cutoff(self, rng):
        u = (1, 2)
        nodes = rng.random((100, 2))
        values = np.array([k for k in range(-8, 8) if k != 0])
        coefficients = rng.standard_normal(values.size ** 2) + 1j * rng.standard_normal(values.size ** 2)
        exact = direct_group_forward(u, nodes, coefficients, values, Basis.EXPONENTIAL)
        errors = [
            _relative(fast_group_forward(u, nodes, coefficients, 16, Basis.EXPONENTIAL, cutoff=m), exact)
            for m in range(2, 7)
        ]
        assert all(a > b for a, b in zip(errors, errors[1:]))
        assert errors[-1] < 1e-7

    @pytest.mark.parametrize("u", [(1,), (1, 2)])
    def test_grid_aligned_single_frequency(self, u):
        window = Window("kaiser_bessel", 2.0, 6)
        bandwidth = 16
        n = window.grid_size(bandwidth)
        values = np.array([k for k in range(-8, 8) if k != 0])
        steps = np.arange(n)
        nodes = steps[:, None] / n if len(u) == 1 else np.stack([steps, (3 * steps) % n], axis=1) / n
        frequency = np.array([3, -5])[:len(u)]
        coefficients = np.zeros(values.size ** len(u), dtype=complex)
        flat = np.ravel_multi_index(tuple(np.searchsorted(values, k) for k in frequency),
                                    (values.size,) * len(u), order="F")
        coefficients[flat] = 1.0
        out = fast_group_forward(u, nodes, coefficients, bandwidth, Basis.EXPONENTIAL, window=window)
        np.testing.assert_allclose(out, np.exp(2j * np.pi * nodes @ frequency), atol=1e-9)
