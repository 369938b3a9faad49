"""
Structural self-checks run by the `verify` command.

Each check builds a small problem, measures one invariant of the
discretisation and compares it with a fixed threshold.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from iga_plate.assembly import MaterialParams, PlateProblem, assemble_operator, mixed_form_value
from iga_plate.geometry import GeometryMap, quarter_annulus_map
from iga_plate.solver import CovariantShear, DiscreteSolution, MixedTriple, solve
from iga_plate.spaces import (
    BoundaryKind,
    BoundarySpec,
    PlateSpaces,
    apply_boundary_conditions,
    make_mesh,
    make_plate_spaces,
    verify_gradient_inclusion,
)
from iga_plate.splines import basis_matrix

logger = logging.getLogger(__name__)

PARTITION_TOL  = 1e-12
INCLUSION_TOL  = 1e-10
SYMMETRY_TOL   = 1e-12
REPRODUCE_TOL  = 1e-8


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    threshold: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.threshold)


def random_breakpoints(rng: np.random.Generator, n_elements: int) -> list[float]:
    """Nonuniform breakpoints with interior points drawn away from each other."""
    while True:
        inner = np.sort(rng.uniform(0.05, 0.95, n_elements - 1))
        z = np.concatenate([[0.0], inner, [1.0]])
        if np.min(np.diff(z)) > 0.05:
            return z.tolist()


def _setup(p: int, alpha: int, n_elements: int, rng: np.random.Generator) -> PlateSpaces:
    mesh = make_mesh(random_breakpoints(rng, n_elements), random_breakpoints(rng, n_elements))
    return make_plate_spaces(p, alpha, mesh)


def check_partition_of_unity(p: int, alpha: int, rng: np.random.Generator, n_points: int = 200) -> CheckResult:
    spaces = _setup(p, alpha, 4, rng)
    xs = rng.uniform(0.0, 1.0, n_points)
    worst = 0.0
    for space in (spaces.w, spaces.theta1, spaces.theta2):
        for kv in (space.kv_u, space.kv_v):
            worst = max(worst, float(np.max(np.abs(basis_matrix(kv, xs)[0].sum(axis=1) - 1.0))))
    return CheckResult("partition of unity", worst, PARTITION_TOL)


def check_gradient_inclusion(p: int, alpha: int, rng: np.random.Generator) -> CheckResult:
    spaces = _setup(p, alpha, 4, rng)
    return CheckResult("gradient inclusion", verify_gradient_inclusion(spaces), INCLUSION_TOL)


def _annulus_problem(t: float = 1e-2) -> PlateProblem:
    geometry: GeometryMap = quarter_annulus_map()
    return PlateProblem(
        MaterialParams(), t, geometry, BoundarySpec.uniform(BoundaryKind.HARD), lambda x, y: 1e4 * np.ones_like(x),
    )


def check_symmetry(p: int, alpha: int, rng: np.random.Generator) -> CheckResult:
    spaces = _setup(p, alpha, 4, rng)
    matrix, _ = assemble_operator(_annulus_problem(), spaces)
    asym = abs(matrix - matrix.T).max() / abs(matrix).max()
    return CheckResult("operator symmetry", float(asym), SYMMETRY_TOL)


def check_reproduction(p: int, alpha: int, rng: np.random.Generator) -> CheckResult:
    """Manufactured in-space solution: rhs = K x_true, then solve and compare."""
    spaces = _setup(p, alpha, 4, rng)
    problem = _annulus_problem(t=1.0)
    matrix, _ = assemble_operator(problem, spaces)
    free = apply_boundary_conditions(spaces, problem.bc).free_dofs(spaces)
    reduced = matrix[free][:, free].tocsr()
    x_true = rng.standard_normal(free.size)
    x = solve(reduced, reduced @ x_true, tol=1e-12)
    error = float(np.linalg.norm(x - x_true) / np.linalg.norm(x_true))
    return CheckResult("in-space reproduction", error, REPRODUCE_TOL)


def check_mixed_symmetry(p: int, alpha: int, rng: np.random.Generator) -> CheckResult:
    spaces = _setup(p, alpha, 3, rng)
    problem = _annulus_problem()
    material = problem.material

    def random_triple() -> MixedTriple:
        fields = DiscreteSolution.from_vector(
            spaces, problem.geometry, rng.standard_normal(spaces.ndof), problem.thickness, material,
        )
        shear = CovariantShear(
            spaces, problem.geometry,
            rng.standard_normal(spaces.theta1.ndof), rng.standard_normal(spaces.theta2.ndof),
        )
        return MixedTriple(fields, shear)

    a, b = random_triple(), random_triple()
    ab = mixed_form_value(problem, a, b, spaces.mesh, q=p + 1)
    ba = mixed_form_value(problem, b, a, spaces.mesh, q=p + 1)
    return CheckResult("mixed-form symmetry", abs(ab - ba) / max(abs(ab), abs(ba), 1e-300), SYMMETRY_TOL)


CHECKS = (
    check_partition_of_unity,
    check_gradient_inclusion,
    check_symmetry,
    check_reproduction,
    check_mixed_symmetry,
)


def run_verification(p: int = 3, alpha: int = 2, seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    results = []
    for check in CHECKS:
        result = check(p, alpha, rng)
        logger.info("%s: %.3e (threshold %.0e)", result.name, result.value, result.threshold)
        results.append(result)
    return results
