"""
Convergence-study harness shared by the benchmark cases.

Provides:
  - CaseSpec                 : geometry, boundary partition, load, exact/reference recipe, mesh recipe
  - MeshRecipe               : uniform or boundary-layer-adapted parametric meshes per level
  - ReferenceRecipe          : fine-mesh reference solution settings with the level guard
  - build_level              : mesh, refined geometry and compatible spaces for one level
  - run_convergence_study    : per-level solve + error measurement + slopes
  - strong_form_residual     : weak residual of a closed-form solution against the discrete test space
  - thickness_sweep          : errors and Kirchhoff defect over a list of thicknesses
  - matched_dof_comparison   : adapted vs uniform errors interpolated at equal N_DOF
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Literal, Sequence

import numpy as np
import pandas as pd

from iga_plate.assembly import LoadFunction, MaterialParams, PlateProblem, bending_stress
from iga_plate.core import ParameterError, RefinementError
from iga_plate.geometry import GeometryMap, evaluate_map_grid, refine_to_mesh
from iga_plate.norms import (
    ErrorReport,
    ExactSolution,
    convergence_slope,
    error_norms,
    fitted_rate,
    kirchhoff_defect,
)
from iga_plate.solver import DEFAULT_TOL, DiscreteSolution, solve_plate
from iga_plate.spaces import (
    BoundarySpec,
    ParametricMesh,
    PlateSpaces,
    apply_boundary_conditions,
    make_mesh,
    make_plate_spaces,
)
from iga_plate.splines import basis_matrix, uniform_breakpoints

logger = logging.getLogger(__name__)

# ─── Study constants ──────────────────────────────────────────────────────────
LAYER_FRACTION      = 0.03      # parametric width of each boundary-layer band
REFERENCE_GUARD     = 4         # reference must be >= 4x finer than the finest study level
REFERENCE_CACHE_SIZE = 2        # fine-mesh reference solutions kept alive
STUDY_COLUMNS = [
    "level", "h", "n_dof",
    "err_theta_h1", "err_theta_l2", "err_w_h1", "err_w_l2", "err_shear_t_weighted",
    "slope_theta_h1", "slope_w_h1",
]


# ─── Recipes ─────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class MeshRecipe:
    """
    Level N -> parametric mesh.

    uniform       : N x N elements.
    layer_adapted : N elements in u; in v the bands [0, f], [f, 1-f], [1-f, 1]
                    are each split into N equal elements.
    """

    kind: Literal["uniform", "layer_adapted"] = "uniform"
    layer_fraction: float = LAYER_FRACTION

    def __post_init__(self) -> None:
        if self.kind not in ("uniform", "layer_adapted"):
            raise ParameterError(f"mesh kind must be 'uniform' or 'layer_adapted', got {self.kind!r}")
        if not 0.0 < self.layer_fraction < 0.5:
            raise ParameterError(f"layer_fraction must lie in (0, 0.5), got {self.layer_fraction}")

    def mesh(self, level: int) -> ParametricMesh:
        if level < 1:
            raise ParameterError(f"mesh level must be a positive element count, got {level}")
        zu = uniform_breakpoints(level)
        if self.kind == "uniform":
            return make_mesh(zu, zu)
        f = self.layer_fraction
        bands = [(0.0, f), (f, 1.0 - f), (1.0 - f, 1.0)]
        zv = np.unique(np.concatenate([np.linspace(a, b, level + 1) for a, b in bands]))
        return make_mesh(zu, zv)


@dataclass(frozen=True)
class ReferenceRecipe:
    level: int = 128
    p: int = 3
    alpha: int = 2
    mesh: MeshRecipe | None = None

    def check_against(self, levels: Sequence[int]) -> None:
        finest = max(levels)
        if self.level < REFERENCE_GUARD * finest:
            raise RefinementError(
                f"reference level {self.level} must be at least {REFERENCE_GUARD}x the finest "
                f"study level {finest} (two bisections finer)"
            )


@dataclass(frozen=True, eq=False)
class CaseSpec:
    name: str
    display_name: str
    geometry: Callable[[], GeometryMap]
    bc: BoundarySpec
    load_factory: Callable[[MaterialParams], LoadFunction]
    exact_factory: Callable[[float, MaterialParams], ExactSolution] | None = None
    reference: ReferenceRecipe | None = None
    mesh: MeshRecipe = field(default_factory=MeshRecipe)

    def __post_init__(self) -> None:
        if self.exact_factory is None and self.reference is None:
            raise ParameterError(f"case {self.name!r} needs an exact solution or a reference recipe")

    def load(self, material: MaterialParams | None = None) -> LoadFunction:
        return self.load_factory(material or MaterialParams())

    @property
    def cache_key(self) -> tuple:
        return (self.name, self.display_name, self.bc, self.reference, self.mesh)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, CaseSpec) and self.cache_key == other.cache_key

    def __hash__(self) -> int:
        return hash(self.cache_key)

    def problem(self, t: float, material: MaterialParams | None = None) -> PlateProblem:
        material = material or MaterialParams()
        return PlateProblem(material, t, self.geometry(), self.bc, self.load_factory(material))


# ─── Levels ──────────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class LevelSetup:
    level: int
    mesh: ParametricMesh
    geometry: GeometryMap
    spaces: PlateSpaces


def build_level(
    case: CaseSpec, p: int, alpha: int, level: int, recipe: MeshRecipe | None = None,
) -> LevelSetup:
    mesh = (recipe or case.mesh).mesh(level)
    spaces = make_plate_spaces(p, alpha, mesh)
    geometry = refine_to_mesh(case.geometry(), p, alpha, mesh.breakpoints_u, mesh.breakpoints_v)
    return LevelSetup(level, mesh, geometry, spaces)


def _solve_level(
    case: CaseSpec, setup: LevelSetup, t: float, material: MaterialParams,
    q: int | None, tol: float, workers: int,
) -> DiscreteSolution:
    problem = PlateProblem(material, t, setup.geometry, case.bc, case.load_factory(material))
    return solve_plate(problem, setup.spaces, q=q, tol=tol, workers=workers)


@lru_cache(maxsize=REFERENCE_CACHE_SIZE)
def reference_solution(
    case: CaseSpec, t: float, material: MaterialParams, tol: float = DEFAULT_TOL, workers: int = 1,
) -> DiscreteSolution:
    recipe = case.reference
    if recipe is None:
        raise ParameterError(f"case {case.name!r} has no reference recipe")
    setup = build_level(case, recipe.p, recipe.alpha, recipe.level, recipe.mesh)
    logger.info(
        "computing %s reference: level %d, p=%d, alpha=%d, t=%.1e",
        case.name, recipe.level, recipe.p, recipe.alpha, t,
    )
    return _solve_level(case, setup, t, material, None, tol, workers)


# ─── Study ───────────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class StudyResult:
    case: str
    p: int
    alpha: int
    t: float
    levels: list[int]
    reports: list[ErrorReport]

    def _series(self, attr: str) -> list[float]:
        return [getattr(r, attr) for r in self.reports]

    @property
    def hs(self) -> list[float]:
        return [r.h for r in self.reports]

    @property
    def ndofs(self) -> list[int]:
        return [r.ndof for r in self.reports]

    @property
    def slopes_theta_h1(self) -> list[float | None]:
        return convergence_slope(self._series("err_theta_H1"), self.hs)

    @property
    def slopes_w_h1(self) -> list[float | None]:
        return convergence_slope(self._series("err_w_H1"), self.hs)

    def fitted(self, attr: str = "err_theta_H1") -> float:
        return fitted_rate(self._series(attr), self.hs)

    def to_frame(self) -> pd.DataFrame:
        slope_theta = [None] + self.slopes_theta_h1
        slope_w = [None] + self.slopes_w_h1
        rows = [
            {
                "level":                level,
                "h":                    r.h,
                "n_dof":                r.ndof,
                "err_theta_h1":         r.err_theta_H1,
                "err_theta_l2":         r.err_theta_L2,
                "err_w_h1":             r.err_w_H1,
                "err_w_l2":             r.err_w_L2,
                "err_shear_t_weighted": r.err_shear_scaled,
                "slope_theta_h1":       st,
                "slope_w_h1":           sw,
            }
            for level, r, st, sw in zip(self.levels, self.reports, slope_theta, slope_w)
        ]
        return pd.DataFrame(rows, columns=STUDY_COLUMNS)


def run_convergence_study(
    case: CaseSpec,
    p: int,
    alpha: int,
    t: float,
    levels: Sequence[int],
    material: MaterialParams | None = None,
    q: int | None = None,
    tol: float = DEFAULT_TOL,
    workers: int = 1,
    level_workers: int = 1,
) -> StudyResult:
    levels = [int(n) for n in levels]
    if not levels:
        raise ParameterError("levels must not be empty")
    if any(b <= a for a, b in zip(levels[:-1], levels[1:])):
        raise ParameterError(f"levels must be strictly increasing, got {levels}")
    material = material or MaterialParams()

    if case.exact_factory is not None:
        reference: ExactSolution | DiscreteSolution = case.exact_factory(t, material)
    else:
        case.reference.check_against(levels)
        reference = reference_solution(case, t, material, tol, workers)

    def run_level(level: int) -> ErrorReport:
        setup = build_level(case, p, alpha, level)
        sol = _solve_level(case, setup, t, material, q, tol, workers)
        report = error_norms(sol, reference)
        logger.info(
            "%s level %d: h=%.4g ndof=%d err_theta_H1=%.4e err_w_H1=%.4e",
            case.name, level, report.h, report.ndof, report.err_theta_H1, report.err_w_H1,
        )
        return report

    if level_workers > 1:
        with ThreadPoolExecutor(max_workers=level_workers) as pool:
            reports = list(pool.map(run_level, levels))
    else:
        reports = [run_level(level) for level in levels]
    return StudyResult(case.name, p, alpha, t, levels, reports)


# ─── Consistency and robustness ──────────────────────────────────────────────

def strong_form_residual(
    case: CaseSpec,
    p: int,
    alpha: int,
    t: float,
    level: int,
    material: MaterialParams | None = None,
    q: int | None = None,
    load: LoadFunction | None = None,
) -> float:
    """
    Relative weak residual ||A(theta, w) - F|| / ||F|| of the closed-form pair
    against every free discrete test function, quadrature q = p + 3.
    """
    if case.exact_factory is None:
        raise ParameterError(f"case {case.name!r} has no closed-form solution")
    material = material or MaterialParams()
    exact = case.exact_factory(t, material)
    load = load or case.load_factory(material)
    setup = build_level(case, p, alpha, level)
    spaces, mesh = setup.spaces, setup.mesh
    q = q or p + 3

    pu, wu, pv, wv = mesh.quadrature(q)
    us, vs = pu.ravel(), pv.ravel()
    grid = evaluate_map_grid(setup.geometry, us, vs)
    measure = np.outer(wu.ravel(), wv.ravel()) * np.abs(grid.det)
    x, y = grid.points[..., 0], grid.points[..., 1]
    inv, d_inv = grid.inverse, grid.inverse_derivative

    grad_theta = exact.grad_theta(x, y)
    stress = bending_stress(material, 0.5 * (grad_theta + np.swapaxes(grad_theta, -1, -2)))
    gamma = material.shear_coefficient(t) * (exact.theta(x, y) - exact.grad_w(x, y))
    # stress_dual[a, b] = sum_g stress[a, g] inv[b, g]
    stress_dual = stress @ np.swapaxes(inv, -1, -2)

    def project(space, c0: np.ndarray, cu: np.ndarray, cv: np.ndarray) -> np.ndarray:
        bu = basis_matrix(space.kv_u, us, 1)
        bv = basis_matrix(space.kv_v, vs, 1)
        r = bu[0].T @ (c0 * measure) @ bv[0] + bu[1].T @ (cu * measure) @ bv[0] + bu[0].T @ (cv * measure) @ bv[1]
        return space.from_grid(r)

    blocks = []
    loads = []
    for comp, space in ((0, spaces.theta1), (1, spaces.theta2)):
        # test field eta = DF^{-T} (N e_comp): terms in N, dN/du, dN/dv
        c0 = (
            np.einsum("...ba,...ab->...", d_inv[..., :, comp, :], stress_dual)
            + np.einsum("...a,...a->...", inv[..., comp, :], gamma)
        )
        cb = np.einsum("...a,...ab->...b", inv[..., comp, :], stress_dual)
        blocks.append(project(space, c0, cb[..., 0], cb[..., 1]))
        loads.append(np.zeros(space.ndof))
    gamma_hat = np.einsum("...ba,...a->...b", inv, gamma)
    f = np.broadcast_to(np.asarray(load(x, y), dtype=float), x.shape)
    blocks.append(project(spaces.w, np.zeros_like(x), -gamma_hat[..., 0], -gamma_hat[..., 1]))
    zero = np.zeros_like(x)
    loads.append(project(spaces.w, f, zero, zero))

    free = apply_boundary_conditions(spaces, case.bc).free_dofs(spaces)
    residual = (np.concatenate(blocks) - np.concatenate(loads))[free]
    scale = float(np.linalg.norm(np.concatenate(loads)[free]))
    value = float(np.linalg.norm(residual)) / scale if scale > 0 else float(np.linalg.norm(residual))
    logger.debug("strong-form residual %s level %d: %.3e", case.name, level, value)
    return value


def thickness_sweep(
    case: CaseSpec,
    p: int,
    alpha: int,
    ts: Sequence[float],
    level: int,
    material: MaterialParams | None = None,
    tol: float = DEFAULT_TOL,
    workers: int = 1,
) -> pd.DataFrame:
    """One fixed mesh, several thicknesses: errors and ||theta_h - grad w_h|| / t^2."""
    material = material or MaterialParams()
    setup = build_level(case, p, alpha, level)
    rows = []
    for t in ts:
        sol = _solve_level(case, setup, t, material, None, tol, workers)
        if case.exact_factory is not None:
            reference: ExactSolution | DiscreteSolution = case.exact_factory(t, material)
        else:
            case.reference.check_against([level])
            reference = reference_solution(case, t, material, tol, workers)
        report = error_norms(sol, reference)
        defect = kirchhoff_defect(sol)
        rows.append({
            "t":                t,
            "n_dof":            report.ndof,
            "err_theta_h1":     report.err_theta_H1,
            "err_w_h1":         report.err_w_H1,
            "kirchhoff_defect": defect,
            "defect_over_t2":   defect / t ** 2,
        })
        logger.info("%s t=%.1e: err_theta_H1=%.4e defect/t^2=%.4e", case.name, t, report.err_theta_H1, defect / t ** 2)
    return pd.DataFrame(rows)


def matched_dof_comparison(
    uniform: StudyResult, adapted: StudyResult, attr: str = "err_w_H1",
) -> pd.DataFrame:
    """
    Adapted-mesh errors next to the uniform error curve interpolated (log-log in
    N_DOF) at the adapted N_DOF; rows outside the uniform N_DOF range get NaN.
    """
    log_n = np.log(np.asarray(uniform.ndofs, dtype=float))
    log_e = np.log(np.asarray([getattr(r, attr) for r in uniform.reports]))
    rows = []
    for level, r in zip(adapted.levels, adapted.reports):
        n = math.log(r.ndof)
        inside = log_n[0] <= n <= log_n[-1]
        uniform_err = float(np.exp(np.interp(n, log_n, log_e))) if inside else float("nan")
        rows.append({
            "level":         level,
            "n_dof":         r.ndof,
            "adapted_error": getattr(r, attr),
            "uniform_error": uniform_err,
            "ratio":         getattr(r, attr) / uniform_err if inside else float("nan"),
        })
    return pd.DataFrame(rows)
