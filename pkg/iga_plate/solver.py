"""
Linear solve, discrete solution packaging, field evaluation and shear recovery.

Provides:
  - solve            : equilibrated sparse LU judged by backward error, Jacobi-preconditioned CG fallback
  - DiscreteSolution : (theta_h, w_h) with their spaces and geometry
  - evaluate_grid    : w, grad w, theta, grad theta on a parametric tensor grid
  - eval_solution    : the same at one parametric point
  - recover_shear    : gamma_h = mu k t^-2 (theta_h - grad w_h)
  - solve_plate      : constraints -> assembly -> solve -> DiscreteSolution
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from iga_plate.assembly import (
    LinearSystem,
    MaterialParams,
    PlateProblem,
    assemble_system,
)
from iga_plate.core import SolverError
from iga_plate.geometry import GeometryMap, evaluate_map_grid, push_covariant, push_gradient
from iga_plate.spaces import PlateSpaces, apply_boundary_conditions

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10       # normwise backward error
REFINEMENT_STEPS = 3
CG_MAX_ITER = 5000


# ─── Linear solve ────────────────────────────────────────────────────────────

def _relative_residual(matrix: sp.spmatrix, x: np.ndarray, b: np.ndarray) -> float:
    norm_b = np.linalg.norm(b)
    r = np.linalg.norm(matrix @ x - b)
    return float(r / norm_b) if norm_b > 0 else float(r)


def backward_error(matrix: sp.spmatrix, x: np.ndarray, b: np.ndarray) -> float:
    """Normwise backward error ||A x - b|| / (||A|| ||x|| + ||b||), infinity norms."""
    r = np.linalg.norm(matrix @ x - b, np.inf)
    norm_a = float(abs(sp.csr_matrix(matrix)).sum(axis=1).max())
    denom = norm_a * np.linalg.norm(x, np.inf) + np.linalg.norm(b, np.inf)
    return float(r / denom) if denom > 0 else float(r)


def symmetric_scaling(matrix: sp.spmatrix) -> np.ndarray:
    """s = diag(A)^{-1/2}, so that S A S has a unit diagonal; ones if the diagonal is not positive."""
    diag = np.asarray(matrix.diagonal(), dtype=float)
    if diag.size and np.all(diag > 0):
        return 1.0 / np.sqrt(diag)
    return np.ones_like(diag)


def _solve_cg(matrix: sp.csr_matrix, b: np.ndarray, tol: float, x0: np.ndarray | None) -> np.ndarray:
    diag = matrix.diagonal()
    if np.any(diag <= 0):
        raise SolverError("matrix has a non-positive diagonal, CG preconditioner undefined")
    precond = spla.LinearOperator(matrix.shape, matvec=lambda r: r / diag)
    x, info = spla.cg(
        matrix, b, x0=x0, rtol=tol, atol=0.0, maxiter=min(20 * b.size, CG_MAX_ITER), M=precond,
    )
    if info < 0:
        raise SolverError(f"conjugate gradients broke down (info={info})", backward_error(matrix, x, b))
    return x


def solve(system: LinearSystem | sp.spmatrix, rhs: np.ndarray | None = None, tol: float = DEFAULT_TOL) -> np.ndarray:
    """
    Solve the reduced SPD system to normwise backward error tol.

    The matrix is equilibrated symmetrically before the sparse LU, followed by
    at most REFINEMENT_STEPS steps of iterative refinement. CG takes over only
    when the factorization fails or its answer misses tol. Accepts a
    LinearSystem, or a bare sparse/dense matrix with its rhs.
    """
    if isinstance(system, LinearSystem):
        matrix, b = system.matrix, system.rhs
    else:
        matrix, b = sp.csr_matrix(system), np.asarray(rhs, dtype=float)
    matrix = sp.csr_matrix(matrix)
    b = np.atleast_1d(b)
    if not np.any(b):
        return np.zeros_like(b)

    x = None
    error = float("inf")
    try:
        s = symmetric_scaling(matrix)
        scale = sp.diags(s)
        lu = spla.splu((scale @ matrix @ scale).tocsc())
        x = s * lu.solve(s * b)
        error = backward_error(matrix, x, b)
        for _ in range(REFINEMENT_STEPS):
            if error <= tol:
                break
            x = x + s * lu.solve(s * (b - matrix @ x))
            error = backward_error(matrix, x, b)
    except RuntimeError as exc:
        logger.warning("sparse factorization failed (%s), falling back to CG", exc)
        x = None

    if x is None or not np.all(np.isfinite(x)) or error > tol:
        if x is not None:
            logger.warning("direct solve backward error %.3e above tol %.1e, falling back to CG", error, tol)
        x0 = x if x is not None and np.all(np.isfinite(x)) else None
        x = _solve_cg(matrix, b, tol, x0)
        error = backward_error(matrix, x, b)

    logger.debug(
        "solve: n=%d backward error=%.3e relative residual=%.3e",
        b.size, error, _relative_residual(matrix, x, b),
    )
    if not np.isfinite(error) or error > tol:
        raise SolverError("solve did not reach the requested tolerance", error)
    return x


# ─── Discrete solution ───────────────────────────────────────────────────────

@dataclass(frozen=True)
class FieldGrid:
    """Physical fields on a parametric tensor grid (Pu, Pv)."""

    points: np.ndarray
    det: np.ndarray
    w: np.ndarray
    grad_w: np.ndarray
    theta: np.ndarray
    grad_theta: np.ndarray


@dataclass(frozen=True, eq=False)
class DiscreteSolution:
    spaces: PlateSpaces
    geometry: GeometryMap
    coeff_theta1: np.ndarray
    coeff_theta2: np.ndarray
    coeff_w: np.ndarray
    thickness: float
    material: MaterialParams

    @classmethod
    def from_vector(
        cls,
        spaces: PlateSpaces,
        geometry: GeometryMap,
        x: np.ndarray,
        thickness: float,
        material: MaterialParams,
    ) -> "DiscreteSolution":
        c1, c2, cw = spaces.split(np.asarray(x, dtype=float))
        return cls(spaces, geometry, c1.copy(), c2.copy(), cw.copy(), thickness, material)

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.coeff_theta1, self.coeff_theta2, self.coeff_w])

    @property
    def ndof(self) -> int:
        return self.spaces.ndof

    def evaluate_grid(self, us: np.ndarray, vs: np.ndarray) -> FieldGrid:
        return evaluate_grid(self, us, vs)

    def __call__(self, uhat: tuple[float, float]) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
        return eval_solution(self, uhat)


def evaluate_grid(sol: DiscreteSolution, us: np.ndarray, vs: np.ndarray) -> FieldGrid:
    us = np.atleast_1d(np.asarray(us, dtype=float))
    vs = np.atleast_1d(np.asarray(vs, dtype=float))
    grid = evaluate_map_grid(sol.geometry, us, vs)
    w_hat = sol.spaces.w.evaluate_grid(sol.coeff_w, us, vs, 1)
    t1 = sol.spaces.theta1.evaluate_grid(sol.coeff_theta1, us, vs, 1)
    t2 = sol.spaces.theta2.evaluate_grid(sol.coeff_theta2, us, vs, 1)

    grad_w = push_gradient(grid.inverse, np.stack([w_hat[1], w_hat[2]], axis=-1))
    vhat = np.stack([t1[0], t2[0]], axis=-1)
    dvhat = np.stack([np.stack([t1[1], t1[2]], axis=-1), np.stack([t2[1], t2[2]], axis=-1)], axis=-2)
    theta, grad_theta = push_covariant(grid.inverse, grid.inverse_derivative, vhat, dvhat)
    return FieldGrid(
        points=grid.points,
        det=grid.det,
        w=w_hat[0],
        grad_w=grad_w,
        theta=theta,
        grad_theta=grad_theta,
    )


def eval_solution(
    sol: DiscreteSolution, uhat: tuple[float, float],
) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    """(w, grad w, theta, grad theta) at one parametric point, physical quantities."""
    g = evaluate_grid(sol, np.array([uhat[0]]), np.array([uhat[1]]))
    return float(g.w[0, 0]), g.grad_w[0, 0], g.theta[0, 0], g.grad_theta[0, 0]


# ─── Shear fields ────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class RecoveredShear:
    """gamma_h = mu k t^-2 (theta_h - grad w_h), evaluable pointwise."""

    solution: DiscreteSolution

    @property
    def coefficient(self) -> float:
        return self.solution.material.shear_coefficient(self.solution.thickness)

    def evaluate_grid(self, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
        g = evaluate_grid(self.solution, us, vs)
        return self.coefficient * (g.theta - g.grad_w)

    def __call__(self, uhat: tuple[float, float]) -> np.ndarray:
        return self.evaluate_grid(np.array([uhat[0]]), np.array([uhat[1]]))[0, 0]


@dataclass(frozen=True, eq=False)
class CovariantShear:
    """A discrete shear field s = DF^{-T} s_hat with s_hat in the rotation space."""

    spaces: PlateSpaces
    geometry: GeometryMap
    coeff_1: np.ndarray
    coeff_2: np.ndarray

    def evaluate_grid(self, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
        us = np.atleast_1d(np.asarray(us, dtype=float))
        vs = np.atleast_1d(np.asarray(vs, dtype=float))
        grid = evaluate_map_grid(self.geometry, us, vs)
        s1 = self.spaces.theta1.evaluate_grid(self.coeff_1, us, vs)[0]
        s2 = self.spaces.theta2.evaluate_grid(self.coeff_2, us, vs)[0]
        return push_gradient(grid.inverse, np.stack([s1, s2], axis=-1))


@dataclass(frozen=True, eq=False)
class MixedTriple:
    """(theta, w, gamma) argument of the mixed bilinear form."""

    fields: DiscreteSolution
    shear: RecoveredShear | CovariantShear


def recover_shear(sol: DiscreteSolution) -> RecoveredShear:
    return RecoveredShear(sol)


# ─── Pipeline ────────────────────────────────────────────────────────────────

def solve_plate(
    problem: PlateProblem,
    spaces: PlateSpaces,
    q: int | None = None,
    tol: float = DEFAULT_TOL,
    workers: int = 1,
) -> DiscreteSolution:
    constraints = apply_boundary_conditions(spaces, problem.bc)
    system = assemble_system(problem, spaces, constraints, q=q, workers=workers)
    x_free = solve(system, tol=tol)
    logger.info("solved plate system with %d free dofs (t=%.1e)", system.size, problem.thickness)
    return DiscreteSolution.from_vector(
        spaces, problem.geometry, system.expand(x_free), problem.thickness, problem.material,
    )
