import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hessball import (
    GridFunction,
    NonlinearitySpec,
    PowerSystemSpec,
    QuadratureTable,
    SystemSpec,
    apply_composite,
    apply_operator,
    binomial,
    grid_points,
    hessian_eigenvalue_vector,
    hessian_eigenvalues,
    radial_hessian,
    richardson_order,
)

HESSIAN_PAIRS = [(2, 1), (2, 2), (3, 1), (3, 2), (3, 3), (4, 2), (4, 4)]


def power_pair(N, k, gamma=1.0):
    return PowerSystemSpec(N, (k, k), (gamma, gamma))


def constant_system(N, k):
    f = NonlinearitySpec(((1.0, 0.0, 0.0),))
    return SystemSpec(N, (k, k), (f, f))


def dome(M):
    t = grid_points(M)
    return GridFunction(1.0 - t * t)


class TestQuadratureTable:
    def test_needs_three_points(self):
        with pytest.raises(ValueError):
            QuadratureTable(2)

    def test_cumulative_of_ones(self):
        table = QuadratureTable(101)
        np.testing.assert_allclose(table.cumulative(np.ones(101)), table.t)

    def test_tail_of_ones(self):
        table = QuadratureTable(101)
        tail = table.tail(np.ones(101))
        np.testing.assert_allclose(tail, 1.0 - table.t)
        assert tail[-1] == 0.0

    @pytest.mark.parametrize("power", [0, 1, 2, 3, 5])
    def test_weighted_cumulative_exact_on_constants(self, power):
        table = QuadratureTable(101)
        got = table.weighted_cumulative(np.ones(101), power)
        exact = table.t ** (power + 1) / (power + 1)
        np.testing.assert_allclose(got, exact, rtol=0, atol=1e-15)

    @pytest.mark.parametrize("power", [0, 1, 2, 4])
    def test_weighted_cumulative_exact_on_linear(self, power):
        table = QuadratureTable(101)
        got = table.weighted_cumulative(table.t, power)
        exact = table.t ** (power + 2) / (power + 2)
        np.testing.assert_allclose(got, exact, rtol=0, atol=1e-15)

    def test_weight_power_zero_is_plain_trapezoid(self):
        table = QuadratureTable(64)
        y = np.cos(3.0 * table.t) + 1.5
        np.testing.assert_allclose(
            table.weighted_cumulative(y, 0), table.cumulative(y), atol=1e-14
        )


class TestApplyOperator:
    @pytest.mark.parametrize("N,k", HESSIAN_PAIRS)
    def test_constant_forcing_closed_form(self, N, k):
        # unit forcing: output is (k / (N C(N-1,k-1)))^{1/k} (1 - t^2)/2,
        # exact because the weighted panel rule integrates s^{N-1} exactly
        spec = constant_system(N, k)
        M = 301
        t = grid_points(M)
        w = apply_operator(spec, 1, dome(M))
        amp = (k / (N * binomial(N - 1, k - 1))) ** (1.0 / k)
        np.testing.assert_allclose(
            w.values, amp * (1.0 - t * t) / 2.0, rtol=0, atol=1e-13
        )

    def test_linear_forcing_analytic_profile(self):
        # N=2, k=1, f = v, v = 1-t^2: output is 3/16 - t^2/4 + t^4/16
        spec = power_pair(2, 1)
        M = 1001
        t = grid_points(M)
        w = apply_operator(spec, 1, dome(M))
        exact = 3.0 / 16.0 - t * t / 4.0 + t**4 / 16.0
        assert float(np.max(np.abs(w.values - exact))) < 5e-7

    def test_zero_input_vanishing_forcing_gives_zero(self):
        spec = power_pair(3, 2, gamma=1.5)
        w = apply_operator(spec, 1, GridFunction(np.zeros(51)))
        assert np.all(w.values == 0.0)

    @pytest.mark.parametrize("N,k", [(2, 1), (3, 2), (4, 4)])
    def test_homogeneity(self, N, k):
        gamma = 1.75
        spec = power_pair(N, k, gamma)
        M = 201
        v = dome(M)
        c = 3.7
        w1 = apply_operator(spec, 1, GridFunction(c * v.values))
        w2 = apply_operator(spec, 1, v)
        np.testing.assert_allclose(
            w1.values, c ** (gamma / k) * w2.values, rtol=1e-12, atol=1e-14
        )

    def test_output_shape_invariants(self):
        spec = power_pair(3, 2)
        w = apply_operator(spec, 1, dome(401)).values
        assert w[-1] == 0.0
        assert np.all(w >= 0.0)
        assert np.all(np.diff(w) <= 1e-15)

    def test_equation_index_validation(self):
        spec = power_pair(2, 1)
        with pytest.raises(ValueError):
            apply_operator(spec, 0, dome(51))
        with pytest.raises(ValueError):
            apply_operator(spec, 3, dome(51))

    def test_negative_input_rejected(self):
        spec = power_pair(2, 1)
        t = grid_points(51)
        with pytest.raises(ValueError):
            apply_operator(spec, 1, GridFunction(t * t - 1.0))

    @given(
        st.lists(st.floats(0.0, 2.0), min_size=2, max_size=5),
        st.floats(0.1, 2.0),
        st.sampled_from(HESSIAN_PAIRS),
    )
    def test_monotone_in_input(self, coeffs, bump, pair):
        # f nondecreasing in v and all quadrature weights nonnegative,
        # so v <= w pointwise forces A(v) <= A(w)
        N, k = pair
        spec = SystemSpec(
            N,
            (k, k),
            (
                NonlinearitySpec(((0.7, 0.0, 1.0), (0.3, 1.0, 2.0))),
                NonlinearitySpec(((1.0, 0.0, 1.0),)),
            ),
        )
        t = grid_points(101)
        lo = np.polyval(coeffs, t) * (1.0 - t)
        hi = lo + bump * (1.0 - t * t)
        a = apply_operator(spec, 1, GridFunction(lo)).values
        b = apply_operator(spec, 1, GridFunction(hi)).values
        assert np.all(a <= b + 1e-12)


class TestApplyComposite:
    def test_constant_forcing_fixed_point(self):
        spec = constant_system(2, 1)
        M = 201
        t = grid_points(M)
        w = apply_composite(spec, dome(M))
        np.testing.assert_allclose(w.values, 0.25 * (1.0 - t * t), atol=1e-13)

    def test_return_chain_structure(self):
        spec = PowerSystemSpec(3, (1, 2, 3), (1.0, 1.0, 1.0))
        v1 = dome(101)
        chain = apply_composite(spec, v1, return_chain=True)
        assert len(chain) == 3
        innermost = apply_operator(spec, 3, v1)
        np.testing.assert_array_equal(chain[2].values, innermost.values)
        w = apply_composite(spec, v1)
        np.testing.assert_array_equal(chain[0].values, w.values)

    def test_composite_homogeneity(self):
        spec = PowerSystemSpec(3, (2, 1), (1.0, 0.5))
        rho = spec.homogeneity_ratio
        v = dome(201)
        c = 2.5
        w1 = apply_composite(spec, GridFunction(c * v.values))
        w2 = apply_composite(spec, v)
        np.testing.assert_allclose(
            w1.values, c**rho * w2.values, rtol=1e-12, atol=1e-14
        )


class TestRadialHessian:
    @pytest.mark.parametrize("N,k", HESSIAN_PAIRS)
    def test_paraboloid_gives_binomial(self, N, k):
        # u = (t^2-1)/2 has u'' = u'/t = 1, so S_k = C(N,k) everywhere
        t = grid_points(101)
        sk = radial_hessian(GridFunction((t * t - 1.0) / 2.0), k, N)
        np.testing.assert_allclose(sk.values, binomial(N, k), atol=1e-10)

    def test_zero_profile(self):
        sk = radial_hessian(GridFunction(np.zeros(51)), 2, 3)
        assert np.all(sk.values == 0.0)

    def test_cosine_boundary_value(self):
        # u = -cos(pi t / 2): at t = 1, u'' = 0 and u'/t = pi/2
        M = 2001
        t = grid_points(M)
        sk = radial_hessian(GridFunction(-np.cos(0.5 * np.pi * t)), 1, 2)
        assert abs(sk.values[-1] - 0.5 * np.pi) < 1e-5

    def test_degree_validation(self):
        u = dome(51)
        with pytest.raises(ValueError):
            radial_hessian(u, 0, 3)
        with pytest.raises(ValueError):
            radial_hessian(u, 4, 3)

    def test_small_grid_rejected(self):
        with pytest.raises(ValueError):
            hessian_eigenvalues(GridFunction([0.0, 1.0, 0.0, 1.0]), 2)

    def test_eigenvalue_pair_at_origin(self):
        t = grid_points(101)
        u = GridFunction((t * t - 1.0) / 2.0)
        upp, ratio = hessian_eigenvalues(u, 3)
        assert abs(upp[0] - 1.0) < 1e-10
        assert ratio[0] == upp[0]

    def test_eigenvalue_vector_indexing(self):
        t = grid_points(101)
        u = GridFunction((t * t - 1.0) / 2.0)
        a, b = hessian_eigenvalue_vector(u, 3, 50)
        assert abs(a - 1.0) < 1e-10 and abs(b - 1.0) < 1e-10
        with pytest.raises(IndexError):
            hessian_eigenvalue_vector(u, 3, 101)

    @pytest.mark.parametrize("N,k", [(2, 1), (3, 2), (3, 3), (4, 2)])
    def test_round_trip_through_operator(self, N, k):
        # S_k(D^2(-A(v))) recovers the forcing up to the stencil error
        spec = power_pair(N, k)
        M = 1001
        v = dome(M)
        w = apply_operator(spec, 1, v)
        sk = radial_hessian(GridFunction(-w.values), k, N)
        gap = np.abs(sk.values[2 : M - 2] - v.values[2 : M - 2])
        assert float(np.max(gap)) < 1e-5


class TestGridConvergence:
    def test_constant_forcing_is_exact(self):
        spec = constant_system(3, 2)
        amp = (2.0 / (3.0 * binomial(2, 1))) ** 0.5

        def err(M):
            t = grid_points(M)
            w = apply_operator(spec, 1, dome(M))
            return float(np.max(np.abs(w.values - amp * (1.0 - t * t) / 2.0)))

        rep = richardson_order(err, (51, 101, 201))
        assert rep.saturated and math.isnan(rep.order)

    def test_linear_forcing_second_order(self):
        spec = power_pair(2, 1)

        def err(M):
            t = grid_points(M)
            w = apply_operator(spec, 1, dome(M))
            return float(
                np.max(np.abs(w.values - (3.0 / 16.0 - t * t / 4.0 + t**4 / 16.0)))
            )

        rep = richardson_order(err, (101, 201, 401, 801))
        assert not rep.saturated
        assert 1.85 <= rep.order <= 2.15
