"""Tests for the compatible plate spaces and boundary constraints."""

import numpy as np
import pytest

from iga_plate.core import BoundaryError, ParameterError
from iga_plate.spaces import (
    BoundaryKind,
    BoundarySpec,
    PlateSpaces,
    Side,
    apply_boundary_conditions,
    boundary_indices,
    check_shear_characterization,
    gradient_coefficients,
    make_mesh,
    make_plate_spaces,
    refine_mesh,
    uniform_mesh,
    verify_gradient_inclusion,
)

CLAMPED = BoundaryKind.CLAMPED
HARD = BoundaryKind.HARD
SOFT = BoundaryKind.SOFT
FREE = BoundaryKind.FREE


class TestMesh:
    """Parametric meshes."""

    def test_uniform(self) -> None:
        """A 4 x 2 mesh has eight elements of diameter hypot(1/4, 1/2)."""
        mesh = uniform_mesh(4, 2)
        assert mesh.shape == (4, 2)
        assert len(mesh.elements) == 8
        assert mesh.global_h == pytest.approx(np.hypot(0.25, 0.5))

    def test_refinement_doubles(self) -> None:
        """Bisection of a 3 x 3 mesh gives 6 x 6."""
        assert refine_mesh(uniform_mesh(3)).shape == (6, 6)

    def test_quasi_uniformity_reported(self, caplog) -> None:
        """Strongly graded meshes are accepted with a warning."""
        mesh = make_mesh([0.0, 0.01, 1.0], [0.0, 0.01, 1.0])
        assert mesh.quasi_uniformity < 0.1
        assert "quasi-uniformity" in caplog.text

    def test_invalid_breakpoints(self) -> None:
        """Breakpoints must run from 0 to 1."""
        with pytest.raises(ParameterError, match="breakpoints_u"):
            make_mesh([0.0, 0.5], [0.0, 1.0])


class TestPlateSpaces:
    """Dimensions and the gradient inclusion of the compatible spaces."""

    def test_dimensions_cubic(self) -> None:
        """p=3, alpha=2 on 2 x 2 elements: W 25, Theta1 20, Theta2 20."""
        spaces = make_plate_spaces(3, 2, uniform_mesh(2))
        assert (spaces.w.ndof, spaces.theta1.ndof, spaces.theta2.ndof) == (25, 20, 20)
        assert spaces.ndof == 65
        assert spaces.theta1.degrees == (2, 3)
        assert spaces.theta2.degrees == (3, 2)

    def test_dimensions_quadratic(self) -> None:
        """p=2, alpha=1 on one element: W 9, Theta1 6, Theta2 6."""
        spaces = make_plate_spaces(2, 1, uniform_mesh(1))
        assert (spaces.w.ndof, spaces.theta1.ndof, spaces.theta2.ndof) == (9, 6, 6)

    @pytest.mark.parametrize("p,alpha", [(1, 0), (3, 0), (3, 3)])
    def test_invalid_degree_or_regularity(self, p: int, alpha: int) -> None:
        """p >= 2 and 1 <= alpha <= p-1 are required."""
        with pytest.raises(ParameterError):
            make_plate_spaces(p, alpha, uniform_mesh(2))

    def test_split_offsets(self, square_spaces) -> None:
        """The global vector is ordered (theta1, theta2, w)."""
        x = np.arange(square_spaces.ndof, dtype=float)
        t1, t2, w = square_spaces.split(x)
        assert (t1.size, t2.size, w.size) == (
            square_spaces.theta1.ndof, square_spaces.theta2.ndof, square_spaces.w.ndof,
        )
        assert t2[0] == square_spaces.theta1.ndof

    def test_grid_numbering(self, square_spaces) -> None:
        """Coefficient index i + n1 j maps to grid entry [i, j]."""
        space = square_spaces.w
        coeffs = np.arange(space.ndof, dtype=float)
        grid = space.to_grid(coeffs)
        assert grid[2, 3] == space.index(2, 3)
        np.testing.assert_array_equal(space.from_grid(grid), coeffs)

    @pytest.mark.parametrize("p,alpha", [(2, 1), (3, 1), (3, 2), (4, 3)])
    def test_gradient_inclusion(self, p: int, alpha: int, rng) -> None:
        """grad W_h lies in Theta1 x Theta2 on nonuniform meshes."""
        zu = np.concatenate([[0.0], np.sort(rng.uniform(0.1, 0.9, 3)), [1.0]])
        mesh = make_mesh(zu, [0.0, 0.3, 0.55, 1.0])
        assert verify_gradient_inclusion(make_plate_spaces(p, alpha, mesh)) <= 1e-10

    def test_gradient_inclusion_negative_control(self, square_spaces) -> None:
        """Using the deflection space for both rotations breaks the inclusion."""
        mismatched = PlateSpaces(
            w=square_spaces.w, theta1=square_spaces.w, theta2=square_spaces.w, mesh=square_spaces.mesh,
        )
        assert verify_gradient_inclusion(mismatched) > 1e-6

    def test_gradient_coefficients(self, square_spaces, rng) -> None:
        """The coefficient map reproduces the analytic parametric gradient."""
        c = rng.standard_normal(square_spaces.w.ndof)
        g1, g2 = gradient_coefficients(square_spaces, c)
        us = rng.uniform(0.0, 1.0, 7)
        vs = rng.uniform(0.0, 1.0, 5)
        analytic = square_spaces.w.evaluate_grid(c, us, vs, nderiv=1)
        np.testing.assert_allclose(square_spaces.theta1.evaluate_grid(g1, us, vs)[0], analytic[1], atol=1e-10)
        np.testing.assert_allclose(square_spaces.theta2.evaluate_grid(g2, us, vs)[0], analytic[2], atol=1e-10)


class TestBoundaryConditions:
    """Dof removal for clamped, hard, soft and free sides."""

    def test_all_free_rejected(self) -> None:
        """An all-free plate has a rigid-body kernel."""
        with pytest.raises(BoundaryError, match="at least one side"):
            BoundarySpec.uniform(FREE)

    def test_kind_from_string(self) -> None:
        """Boundary kinds accept their string names."""
        bc = BoundarySpec("clamped", "free", "simply_supported_soft", "simply_supported_hard")
        assert bc.kind(Side.U1) is FREE
        assert bc.sides(HARD, SOFT) == [Side.V0, Side.V1]

    def test_clamped_interior_counts(self) -> None:
        """Clamping every side leaves the interior tensor indices."""
        spaces = make_plate_spaces(3, 2, uniform_mesh(2))
        constraints = apply_boundary_conditions(spaces, BoundarySpec.uniform(CLAMPED))
        free = (
            spaces.w.ndof - constraints.w.size,
            spaces.theta1.ndof - constraints.theta1.size,
            spaces.theta2.ndof - constraints.theta2.size,
        )
        assert free == (9, 6, 6)
        assert constraints.free_dofs(spaces).size == 21

    def test_hard_support_constrains_tangential_only(self) -> None:
        """Hard support fixes w and the component tangent to each side."""
        spaces = make_plate_spaces(3, 2, uniform_mesh(2))
        constraints = apply_boundary_conditions(spaces, BoundarySpec.uniform(HARD))
        assert constraints.w.size == 16
        # Theta1 (4 x 5) loses its rows j = 0 and j = 4; Theta2 (5 x 4) its columns i = 0 and i = 4
        np.testing.assert_array_equal(
            constraints.theta1,
            np.union1d(boundary_indices(spaces.theta1, Side.V0), boundary_indices(spaces.theta1, Side.V1)),
        )
        assert constraints.theta1.size == 8
        assert constraints.theta2.size == 8

    def test_soft_support_keeps_rotations(self) -> None:
        """Soft support only fixes w."""
        spaces = make_plate_spaces(2, 1, uniform_mesh(3))
        constraints = apply_boundary_conditions(spaces, BoundarySpec.uniform(SOFT))
        assert constraints.theta1.size == 0 and constraints.theta2.size == 0
        assert constraints.w.size == 2 * spaces.w.shape[0] + 2 * spaces.w.shape[1] - 4

    def test_free_side_untouched(self) -> None:
        """A free side adds no constraints."""
        spaces = make_plate_spaces(2, 1, uniform_mesh(2))
        only_u0 = apply_boundary_conditions(spaces, BoundarySpec(CLAMPED, FREE, FREE, FREE))
        n1, n2 = spaces.w.shape
        np.testing.assert_array_equal(only_u0.w, spaces.w.index(0, np.arange(n2)))
        assert n1 > 1


class TestShearCharacterization:
    """Tangential traces and corner values of parametric shear fields."""

    def test_zero_field(self, square_spaces) -> None:
        """The zero field satisfies every condition."""
        n = square_spaces.theta1.ndof + square_spaces.theta2.ndof
        assert check_shear_characterization(square_spaces, BoundarySpec.uniform(CLAMPED), np.zeros(n))

    def test_gradient_of_clamped_deflection(self, square_spaces, rng) -> None:
        """Gradients of deflections vanishing on the boundary have zero tangential trace."""
        bc = BoundarySpec.uniform(CLAMPED)
        c = rng.standard_normal(square_spaces.w.ndof)
        c[apply_boundary_conditions(square_spaces, bc).w] = 0.0
        g1, g2 = gradient_coefficients(square_spaces, c)
        assert check_shear_characterization(square_spaces, bc, np.concatenate([g1, g2]))

    def test_constant_field_on_tangent_side(self, square_spaces) -> None:
        """(1, 0) is tangent to a v-side and violates a clamped v0."""
        field = np.concatenate([np.ones(square_spaces.theta1.ndof), np.zeros(square_spaces.theta2.ndof)])
        assert not check_shear_characterization(square_spaces, BoundarySpec(FREE, FREE, CLAMPED, FREE), field)

    def test_constant_field_on_normal_side(self, square_spaces) -> None:
        """(1, 0) is normal to a u-side, so a clamped u0 alone is satisfied."""
        field = np.concatenate([np.ones(square_spaces.theta1.ndof), np.zeros(square_spaces.theta2.ndof)])
        assert check_shear_characterization(square_spaces, BoundarySpec(CLAMPED, FREE, FREE, FREE), field)

    def test_soft_clamped_corner(self, square_spaces) -> None:
        """A field nonzero at a soft/clamped corner is rejected."""
        field = np.concatenate([np.ones(square_spaces.theta1.ndof), np.zeros(square_spaces.theta2.ndof)])
        assert not check_shear_characterization(square_spaces, BoundarySpec(CLAMPED, FREE, SOFT, FREE), field)

    def test_wrong_length(self, square_spaces) -> None:
        """Coefficient vectors of the wrong size are rejected."""
        with pytest.raises(ParameterError, match="shear coefficient vector"):
            check_shear_characterization(square_spaces, BoundarySpec.uniform(CLAMPED), np.zeros(3))
