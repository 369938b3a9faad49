"""Tests for one-dimensional B-spline spaces."""

import numpy as np
import pytest

from iga_plate.core import DomainError, ParameterError, RefinementError, UnsupportedSpaceError
from iga_plate.splines import (
    basis_matrix,
    bisect,
    degree_elevate,
    derivative_residual,
    derivative_space,
    differentiation_matrix,
    element_quadrature,
    eval_basis,
    greville,
    insert_knots,
    make_knot_vector,
    representation_residual,
    transfer_matrix,
    uniform_breakpoints,
    with_regularity,
)


class TestKnotVector:
    """Open knot vectors with uniform interior multiplicity."""

    def test_bernstein(self) -> None:
        """No interior breakpoints gives the Bernstein knots."""
        kv = make_knot_vector(2, (0.0, 1.0), 1)
        np.testing.assert_array_equal(kv.knots, [0, 0, 0, 1, 1, 1])
        assert kv.dimension == 3

    def test_dimension_formula(self) -> None:
        """n = p + 1 + (m - 2) r."""
        kv = make_knot_vector(2, (0.0, 1 / 3, 2 / 3, 1.0), 1)
        assert kv.dimension == 5
        assert kv.regularity == 1
        assert make_knot_vector(3, uniform_breakpoints(4), 2).dimension == 10

    def test_discontinuous(self) -> None:
        """r = p + 1 repeats the interior knot p + 1 times (alpha = -1)."""
        kv = make_knot_vector(3, (0.0, 0.5, 1.0), 4)
        assert np.count_nonzero(kv.knots == 0.5) == 4
        assert kv.regularity == -1

    def test_knots_read_only(self) -> None:
        """The knot array cannot be modified in place."""
        kv = make_knot_vector(2, (0.0, 0.5, 1.0), 1)
        with pytest.raises(ValueError):
            kv.knots[0] = 3.0

    def test_multiplicity_out_of_range(self) -> None:
        """r outside 1..p+1 names the multiplicity."""
        with pytest.raises(ParameterError, match="multiplicity r"):
            make_knot_vector(2, (0.0, 0.5, 1.0), 4)

    def test_non_monotone_breakpoints(self) -> None:
        """Breakpoints must increase strictly."""
        with pytest.raises(ParameterError, match="breakpoints Z"):
            make_knot_vector(2, (0.0, 0.6, 0.4, 1.0), 1)


class TestEvalBasis:
    """Cox-de Boor evaluation."""

    def test_quadratic_bernstein_midpoint(self) -> None:
        """B_{i,2}(0.5) = (1/4, 1/2, 1/4)."""
        result = eval_basis(make_knot_vector(2, (0.0, 1.0), 1), 0.5)
        assert result.first_active_index == 0
        np.testing.assert_allclose(result.values[0], [0.25, 0.5, 0.25], atol=1e-15)

    def test_hat_functions(self) -> None:
        """Piecewise linears on two elements at x = 0.25."""
        kv = make_knot_vector(1, (0.0, 0.5, 1.0), 1)
        table = basis_matrix(kv, [0.25], 1)
        np.testing.assert_allclose(table[0, 0], [0.5, 0.5, 0.0], atol=1e-15)
        np.testing.assert_allclose(table[1, 0], [-2.0, 2.0, 0.0], atol=1e-13)

    @pytest.mark.parametrize("p,r", [(1, 1), (2, 1), (3, 1), (3, 2), (4, 3), (2, 3)])
    def test_partition_of_unity(self, p: int, r: int, rng) -> None:
        """Order-0 values are nonnegative and sum to one."""
        kv = make_knot_vector(p, (0.0, 0.2, 0.45, 0.8, 1.0), r)
        table = basis_matrix(kv, rng.uniform(0.0, 1.0, 100))[0]
        assert np.all(table >= -1e-15)
        np.testing.assert_allclose(table.sum(axis=1), 1.0, atol=1e-12)

    def test_active_functions_in_element(self) -> None:
        """Exactly p + 1 functions are active inside an element."""
        kv = make_knot_vector(3, uniform_breakpoints(4), 1)
        row = basis_matrix(kv, [0.3])[0, 0]
        assert np.count_nonzero(row) == 4

    def test_right_end_is_interpolatory(self) -> None:
        """At x = 1 only the last function is active and equals one."""
        kv = make_knot_vector(3, uniform_breakpoints(3), 1)
        result = eval_basis(kv, 1.0)
        assert result.first_active_index == kv.dimension - kv.degree - 1
        assert result.values[0, -1] == pytest.approx(1.0)

    def test_derivatives_match_finite_differences(self) -> None:
        """First derivatives agree with central differences away from breakpoints."""
        kv = make_knot_vector(3, (0.0, 0.3, 0.7, 1.0), 1)
        xs = np.array([0.1, 0.42, 0.55, 0.9])
        eps = 1e-6
        table = basis_matrix(kv, xs, 1)
        fd = (basis_matrix(kv, xs + eps)[0] - basis_matrix(kv, xs - eps)[0]) / (2 * eps)
        np.testing.assert_allclose(table[1], fd, atol=1e-6)

    def test_outside_domain(self) -> None:
        """Points outside [0, 1] raise a domain error."""
        with pytest.raises(DomainError):
            eval_basis(make_knot_vector(2, (0.0, 1.0), 1), 1.5)

    def test_too_many_derivatives(self) -> None:
        """nderiv above p is rejected."""
        with pytest.raises(ParameterError, match="nderiv"):
            eval_basis(make_knot_vector(1, (0.0, 1.0), 1), 0.5, nderiv=2)


class TestDerivativeSpace:
    """The derivative relation S^p_alpha -> S^{p-1}_{alpha-1}."""

    def test_cubic(self) -> None:
        """Cubic C^2 splines on two elements differentiate into quadratic C^1 splines."""
        kv = make_knot_vector(3, (0.0, 0.5, 1.0), 1)
        target = derivative_space(kv)
        assert (target.degree, target.multiplicity, target.breakpoints) == (2, 1, kv.breakpoints)
        assert (kv.dimension, target.dimension) == (5, 4)

    def test_linear_to_constant(self) -> None:
        """Linears differentiate into constants."""
        target = derivative_space(make_knot_vector(1, (0.0, 1.0), 1))
        assert target.degree == 0 and target.dimension == 1

    @pytest.mark.parametrize("p,r", [(0, 1), (2, 3)])
    def test_unsupported(self, p: int, r: int) -> None:
        """p = 0 or alpha = -1 have no derivative space."""
        with pytest.raises(UnsupportedSpaceError):
            derivative_space(make_knot_vector(p, (0.0, 0.5, 1.0), r))

    @pytest.mark.parametrize("p,r", [(2, 1), (3, 1), (3, 2), (4, 2)])
    def test_least_squares_residual(self, p: int, r: int) -> None:
        """Analytic derivatives are representable to round-off."""
        assert derivative_residual(make_knot_vector(p, (0.0, 0.25, 0.6, 1.0), r)) <= 1e-12

    def test_differentiation_matrix(self, rng) -> None:
        """Coefficients D c reproduce the derivative of the spline with coefficients c."""
        kv = make_knot_vector(3, (0.0, 0.2, 0.5, 0.65, 1.0), 2)
        c = rng.standard_normal(kv.dimension)
        xs = rng.uniform(0.0, 1.0, 50)
        analytic = basis_matrix(kv, xs, 1)[1] @ c
        via_matrix = basis_matrix(derivative_space(kv), xs)[0] @ (differentiation_matrix(kv) @ c)
        np.testing.assert_allclose(via_matrix, analytic, atol=1e-10 * np.max(np.abs(analytic)))


class TestRefinement:
    """Knot insertion, degree elevation and coefficient transfer."""

    def test_bisection(self) -> None:
        """Bisection doubles the elements."""
        kv = make_knot_vector(2, (0.0, 1.0), 1)
        assert bisect(kv).breakpoints == (0.0, 0.5, 1.0)
        assert bisect(kv, 3).n_breakpoints == 9

    def test_duplicate_breakpoint(self) -> None:
        """Inserting an existing breakpoint is an error."""
        kv = make_knot_vector(2, (0.0, 0.5, 1.0), 1)
        with pytest.raises(RefinementError):
            insert_knots(kv, [0.5])

    def test_breakpoint_outside(self) -> None:
        """Breakpoints must lie strictly inside (0, 1)."""
        with pytest.raises(RefinementError):
            insert_knots(make_knot_vector(2, (0.0, 1.0), 1), [1.0])

    def test_refined_representation_agrees(self, rng) -> None:
        """A spline re-represented after knot insertion agrees pointwise."""
        kv = make_knot_vector(3, (0.0, 0.4, 1.0), 1)
        fine = insert_knots(kv, [0.2, 0.7, 0.9])
        c = rng.standard_normal(kv.dimension)
        xs = rng.uniform(0.0, 1.0, 100)
        coarse_values = basis_matrix(kv, xs)[0] @ c
        fine_values = basis_matrix(fine, xs)[0] @ (transfer_matrix(kv, fine) @ c)
        np.testing.assert_allclose(fine_values, coarse_values, atol=1e-12)

    def test_transfer_keeps_end_coefficients(self) -> None:
        """The first and last coefficients carry over exactly under refinement."""
        kv = make_knot_vector(2, (0.0, 1 / 3, 1.0), 1)
        t = transfer_matrix(kv, degree_elevate(insert_knots(kv, [0.1, 0.7]), 3))
        expected_first = np.zeros(kv.dimension)
        expected_first[0] = 1.0
        np.testing.assert_array_equal(t[0], expected_first)
        np.testing.assert_array_equal(t[-1], expected_first[::-1])

    def test_degree_elevation_keeps_identity(self) -> None:
        """x elevated from p=1 to p=3 is still x."""
        kv = make_knot_vector(1, (0.0, 1.0), 1)
        high = degree_elevate(kv, 3)
        xs = np.linspace(0.0, 1.0, 100)
        values = basis_matrix(high, xs)[0] @ (transfer_matrix(kv, high) @ np.array([0.0, 1.0]))
        np.testing.assert_allclose(values, xs, atol=1e-12)

    def test_degree_elevation_keeps_regularity(self) -> None:
        """Elevating p=2, alpha=1 to p=3 keeps alpha=1."""
        kv = make_knot_vector(2, (0.0, 0.5, 1.0), 1)
        high = degree_elevate(kv, 3)
        assert high.regularity == 1 and high.multiplicity == 2
        assert representation_residual(kv, high) <= 1e-12

    def test_degree_elevation_preserves_c1_join(self, rng) -> None:
        """One-sided first derivatives of an elevated C^1 spline agree at the breakpoint."""
        kv = make_knot_vector(2, (0.0, 0.5, 1.0), 1)
        high = degree_elevate(kv, 3)
        c = transfer_matrix(kv, high) @ rng.standard_normal(kv.dimension)
        left = basis_matrix(high, [0.5 - 1e-9], 1)[1] @ c
        right = basis_matrix(high, [0.5 + 1e-9], 1)[1] @ c
        np.testing.assert_allclose(left, right, atol=1e-6)

    def test_degree_elevation_lower_target(self) -> None:
        """Lowering the degree is rejected."""
        with pytest.raises(ParameterError, match="target_p"):
            degree_elevate(make_knot_vector(3, (0.0, 1.0), 1), 2)

    def test_knot_repetition(self) -> None:
        """with_regularity lowers alpha on the same breakpoints and nests."""
        kv = make_knot_vector(3, (0.0, 0.3, 1.0), 1)
        rough = with_regularity(kv, 1)
        assert rough.regularity == 1 and rough.dimension == kv.dimension + 1
        assert representation_residual(kv, rough) <= 1e-12


class TestHelpers:
    """Greville abscissae and element quadrature."""

    def test_greville_linear(self) -> None:
        """For p = 1 the Greville points are the breakpoints."""
        kv = make_knot_vector(1, (0.0, 0.3, 1.0), 1)
        np.testing.assert_allclose(greville(kv), [0.0, 0.3, 1.0])

    def test_greville_reproduces_identity(self) -> None:
        """sum_i g_i B_i(x) = x."""
        kv = make_knot_vector(3, uniform_breakpoints(5), 1)
        xs = np.linspace(0.0, 1.0, 31)
        np.testing.assert_allclose(basis_matrix(kv, xs)[0] @ greville(kv), xs, atol=1e-14)

    def test_element_quadrature(self) -> None:
        """Mapped weights sum to the interval length, points stay inside their element."""
        z = (0.0, 0.2, 1.0)
        points, weights = element_quadrature(z, 3)
        assert points.shape == weights.shape == (2, 3)
        assert weights.sum() == pytest.approx(1.0)
        assert np.all((points[0] > 0.0) & (points[0] < 0.2))
