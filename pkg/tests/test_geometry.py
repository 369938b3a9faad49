"""Tests for geometry maps, push-forwards and the control-net format."""

import numpy as np
import pytest

from iga_plate.core import ParameterError, SingularMapError
from iga_plate.geometry import (
    GeometryMap,
    affine_square_map,
    covariant_push_forward,
    evaluate_map,
    evaluate_map_grid,
    invert_map,
    push_forward_scalar,
    quarter_annulus_map,
    read_control_net,
    refine_to_mesh,
    unit_square_map,
    write_control_net,
)
from iga_plate.splines import make_knot_vector, uniform_breakpoints


class TestConstructors:
    """Square and quarter-annulus maps."""

    def test_identity(self) -> None:
        """The unit square map is the identity."""
        sample = evaluate_map(unit_square_map(), (0.3, 0.7))
        np.testing.assert_allclose(sample.physical_point, [0.3, 0.7], atol=1e-15)
        np.testing.assert_allclose(sample.jacobian, np.eye(2), atol=1e-14)
        assert not unit_square_map().is_rational

    def test_affine_determinant(self) -> None:
        """Scaling by 2 gives det DF = 4."""
        assert evaluate_map(affine_square_map(2.0), (0.1, 0.9)).det == pytest.approx(4.0)

    def test_affine_invalid_scale(self) -> None:
        """Non-positive scales are rejected."""
        with pytest.raises(ParameterError, match="scale"):
            affine_square_map(0.0)

    def test_annulus_corners(self) -> None:
        """u runs along the arc, v runs radially."""
        G = quarter_annulus_map()
        np.testing.assert_allclose(evaluate_map(G, (0.0, 0.0)).physical_point, [1.0, 0.0], atol=1e-14)
        np.testing.assert_allclose(evaluate_map(G, (0.0, 1.0)).physical_point, [2.5, 0.0], atol=1e-14)
        np.testing.assert_allclose(evaluate_map(G, (1.0, 0.0)).physical_point, [0.0, 1.0], atol=1e-14)
        x, y = evaluate_map(G, (0.5, 1.0)).physical_point
        assert np.arctan2(y, x) == pytest.approx(np.pi / 4, abs=1e-14)
        assert G.is_rational

    def test_annulus_radius_is_exact(self, rng) -> None:
        """|F(u, v)| = 1 + 1.5 v to round-off."""
        G = quarter_annulus_map()
        us, vs = rng.uniform(0.0, 1.0, 40), rng.uniform(0.0, 1.0, 25)
        grid = evaluate_map_grid(G, us, vs)
        radius = np.linalg.norm(grid.points, axis=-1)
        assert np.max(np.abs(radius - (1.0 + 1.5 * vs[None, :]))) <= 1e-12

    def test_annulus_orientation(self) -> None:
        """The annulus parametrisation reverses orientation."""
        grid = evaluate_map_grid(quarter_annulus_map(), np.linspace(0, 1, 5), np.linspace(0, 1, 5))
        assert np.all(grid.det < 0.0)

    def test_invalid_radii(self) -> None:
        """Radii must satisfy 0 < r_in < r_out."""
        with pytest.raises(ParameterError, match="radii"):
            quarter_annulus_map(2.0, 1.0)


class TestDerivatives:
    """Jacobian, second derivatives and inverse derivatives."""

    def test_jacobian_matches_finite_differences(self) -> None:
        """DF agrees with central differences."""
        G, u, v, eps = quarter_annulus_map(), 0.37, 0.61, 1e-6
        jac = evaluate_map(G, (u, v)).jacobian
        f = lambda a, b: evaluate_map(G, (a, b)).physical_point  # noqa: E731
        fd = np.column_stack([(f(u + eps, v) - f(u - eps, v)), (f(u, v + eps) - f(u, v - eps))]) / (2 * eps)
        np.testing.assert_allclose(jac, fd, atol=1e-8)

    def test_hessian_matches_finite_differences(self) -> None:
        """Second derivatives agree with differences of DF."""
        G, u, v, eps = quarter_annulus_map(), 0.42, 0.3, 1e-6
        hess = evaluate_map(G, (u, v)).hessian
        jac = lambda a, b: evaluate_map(G, (a, b)).jacobian  # noqa: E731
        np.testing.assert_allclose(hess[:, :, 0], (jac(u + eps, v) - jac(u - eps, v)) / (2 * eps), atol=1e-7)
        np.testing.assert_allclose(hess[:, :, 1], (jac(u, v + eps) - jac(u, v - eps)) / (2 * eps), atol=1e-7)

    def test_inverse_derivative(self) -> None:
        """d(DF^-1)/du_b agrees with differences of DF^-1."""
        G, u, v, eps = quarter_annulus_map(), 0.2, 0.8, 1e-6
        grid = evaluate_map_grid(G, [u], [v])
        inv = lambda a, b: evaluate_map_grid(G, [a], [b]).inverse[0, 0]  # noqa: E731
        d_inv = grid.inverse_derivative[0, 0]
        np.testing.assert_allclose(d_inv[0], (inv(u + eps, v) - inv(u - eps, v)) / (2 * eps), atol=1e-7)
        np.testing.assert_allclose(d_inv[1], (inv(u, v + eps) - inv(u, v - eps)) / (2 * eps), atol=1e-7)

    def test_singular_map(self) -> None:
        """A map collapsing the square onto a segment is singular."""
        kv = make_knot_vector(1, (0.0, 1.0), 1)
        cp = np.array([[[0.0, 0.0], [0.0, 0.0]], [[1.0, 0.0], [1.0, 0.0]]])
        G = GeometryMap(kv, kv, cp, np.ones((2, 2)))
        with pytest.raises(SingularMapError, match="singular"):
            evaluate_map(G, (0.5, 0.5))

    def test_control_net_shape_checked(self) -> None:
        """The control net must match the knot vectors."""
        kv = make_knot_vector(1, (0.0, 1.0), 1)
        with pytest.raises(ParameterError, match="control_points"):
            GeometryMap(kv, kv, np.zeros((3, 2, 2)), np.ones((3, 2)))


class TestPushForward:
    """Scalar and covariant push-forwards."""

    def test_gradient_of_coordinate(self) -> None:
        """The pulled-back x coordinate has physical gradient (1, 0)."""
        G, uhat = quarter_annulus_map(), (0.3, 0.4)
        sample = evaluate_map(G, uhat)
        value, grad = push_forward_scalar(G, uhat, sample.physical_point[0], sample.jacobian[0])
        assert value == sample.physical_point[0]
        np.testing.assert_allclose(grad, [1.0, 0.0], atol=1e-13)

    def test_covariant_tangential_component(self) -> None:
        """v.DF e_b reproduces the parametric component vhat_b."""
        G, uhat, vhat = quarter_annulus_map(), (0.0, 0.5), np.array([0.0, 2.0])
        v = covariant_push_forward(G, uhat, vhat)
        jac = evaluate_map(G, uhat).jacobian
        np.testing.assert_allclose(v @ jac, vhat, atol=1e-13)

    def test_invert_map(self) -> None:
        """Newton inversion recovers the parametric point."""
        G = quarter_annulus_map()
        x = evaluate_map(G, (0.3, 0.6)).physical_point
        np.testing.assert_allclose(invert_map(G, x), [0.3, 0.6], atol=1e-10)


class TestRefinement:
    """Re-representation of the map on finer spaces."""

    def test_refine_to_mesh_keeps_map(self, rng) -> None:
        """Elevation, knot repetition and insertion leave F unchanged."""
        G = quarter_annulus_map()
        fine = refine_to_mesh(G, 3, 2, uniform_breakpoints(4), uniform_breakpoints(8))
        assert fine.kv_u.degree == 3 and fine.kv_u.regularity == 1
        assert fine.kv_v.n_elements == 8
        us, vs = rng.uniform(0.0, 1.0, 20), rng.uniform(0.0, 1.0, 20)
        coarse_grid, fine_grid = evaluate_map_grid(G, us, vs), evaluate_map_grid(fine, us, vs)
        np.testing.assert_allclose(fine_grid.points, coarse_grid.points, atol=1e-12)
        np.testing.assert_allclose(fine_grid.jacobian, coarse_grid.jacobian, atol=1e-10)

    def test_refined_identity_keeps_edges_exact(self) -> None:
        """x = 0 on the edge u = 0 survives refinement without round-off."""
        fine = refine_to_mesh(unit_square_map(), 2, 1, uniform_breakpoints(4), uniform_breakpoints(4))
        grid = evaluate_map_grid(fine, np.array([0.0, 1.0]), np.linspace(0.0, 1.0, 5))
        assert not np.any(grid.points[0, :, 0])
        np.testing.assert_allclose(grid.points[1, :, 0], 1.0, rtol=1e-15)

    def test_control_net_round_trip(self, tmp_path) -> None:
        """Writing and reading a control net gives the same map."""
        G = refine_to_mesh(quarter_annulus_map(), 2, 1, uniform_breakpoints(3), uniform_breakpoints(2))
        path = tmp_path / "annulus.net"
        write_control_net(G, path)
        H = read_control_net(path)
        assert H.kv_u == G.kv_u and H.kv_v == G.kv_v
        np.testing.assert_allclose(H.control_points, G.control_points, rtol=0, atol=1e-15)
        np.testing.assert_allclose(H.weights, G.weights, rtol=0, atol=1e-15)

    def test_truncated_control_net(self, tmp_path) -> None:
        """Files without knot lines are rejected."""
        path = tmp_path / "bad.net"
        path.write_text("1 1 4 4\n", encoding="utf-8")
        with pytest.raises(ParameterError, match="truncated"):
            read_control_net(path)
