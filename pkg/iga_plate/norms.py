"""
Error measurement against exact or reference solutions, the mesh- and
thickness-dependent discrete norms, and convergence rates.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from sklearn.linear_model import LinearRegression

from iga_plate.assembly import to_elements
from iga_plate.core import ParameterError
from iga_plate.geometry import GeometryMap, evaluate_map_grid
from iga_plate.spaces import ParametricMesh
from iga_plate.solver import DiscreteSolution, FieldGrid, evaluate_grid

logger = logging.getLogger(__name__)

ROUNDOFF_FLOOR = 1e-12

Field2D = Callable[[np.ndarray, np.ndarray], np.ndarray]


# ─── Reference solutions ─────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class ExactSolution:
    """
    Closed-form fields of physical coordinates (x, y), broadcasting over arrays.

    Vector fields return a trailing axis of length 2, gradients of vectors a
    trailing (2, 2) block with grad[..., a, g] = d theta_a / d x_g.
    """

    w: Field2D
    grad_w: Field2D
    theta: Field2D
    grad_theta: Field2D
    shear: Field2D


@dataclass(frozen=True)
class ErrorReport:
    h: float
    ndof: int
    err_theta_H1: float
    err_theta_L2: float
    err_w_H1: float
    err_w_L2: float
    err_shear_scaled: float
    triple_norm_components: dict[str, float] | None = field(default=None)

    def __post_init__(self) -> None:
        for name in ("err_theta_H1", "err_theta_L2", "err_w_H1", "err_w_L2", "err_shear_scaled"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0.0):
                raise ParameterError(f"{name} must be finite and non-negative, got {value}")


def _reference_on_grid(
    reference: ExactSolution | DiscreteSolution,
    us: np.ndarray,
    vs: np.ndarray,
    points: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    if isinstance(reference, DiscreteSolution):
        # shared parametric domain: same parametric points, no inversion of F
        g = evaluate_grid(reference, us, vs)
        coeff = reference.material.shear_coefficient(reference.thickness)
        return g.w, g.grad_w, g.theta, g.grad_theta, coeff * (g.theta - g.grad_w)
    x, y = points[..., 0], points[..., 1]
    return (
        reference.w(x, y),
        reference.grad_w(x, y),
        reference.theta(x, y),
        reference.grad_theta(x, y),
        reference.shear(x, y),
    )


def _mesh_quadrature(mesh: ParametricMesh, geometry: GeometryMap, q: int):
    pu, wu, pv, wv = mesh.quadrature(q)
    us, vs = pu.ravel(), pv.ravel()
    grid = evaluate_map_grid(geometry, us, vs)
    measure = np.outer(wu.ravel(), wv.ravel()) * np.abs(grid.det)
    return us, vs, grid, measure


def element_diameters(geometry: GeometryMap, mesh: ParametricMesh) -> np.ndarray:
    """Physical h_K from corners and mid-edges of every element, shape (n_u, n_v)."""
    zu, zv = np.asarray(mesh.breakpoints_u), np.asarray(mesh.breakpoints_v)
    su = np.sort(np.concatenate([zu, 0.5 * (zu[:-1] + zu[1:])]))
    sv = np.sort(np.concatenate([zv, 0.5 * (zv[:-1] + zv[1:])]))
    pts = evaluate_map_grid(geometry, su, sv).points
    n_u, n_v = mesh.shape
    blocks = np.stack(
        [pts[i: i + 2 * n_u: 2, j: j + 2 * n_v: 2] for i in range(3) for j in range(3)], axis=2,
    )
    diff = blocks[:, :, :, None, :] - blocks[:, :, None, :, :]
    return np.sqrt(np.max(np.sum(diff ** 2, axis=-1), axis=(-2, -1)))


def global_mesh_size(geometry: GeometryMap, mesh: ParametricMesh) -> float:
    return float(element_diameters(geometry, mesh).max())


# ─── Errors ──────────────────────────────────────────────────────────────────

def error_norms(
    sol: DiscreteSolution,
    reference: ExactSolution | DiscreteSolution,
    q: int | None = None,
    ndof: int | None = None,
) -> ErrorReport:
    mesh = sol.spaces.mesh
    q = q or sol.spaces.degree + 2
    us, vs, grid, measure = _mesh_quadrature(mesh, sol.geometry, q)
    g: FieldGrid = evaluate_grid(sol, us, vs)
    w_r, gw_r, th_r, gth_r, sh_r = _reference_on_grid(reference, us, vs, grid.points)

    def integral(values: np.ndarray) -> float:
        return float(np.sum(measure * values))

    e_w = integral((g.w - w_r) ** 2)
    e_gw = integral(np.sum((g.grad_w - gw_r) ** 2, axis=-1))
    e_th = integral(np.sum((g.theta - th_r) ** 2, axis=-1))
    e_gth = integral(np.sum((g.grad_theta - gth_r) ** 2, axis=(-2, -1)))
    shear_h = sol.material.shear_coefficient(sol.thickness) * (g.theta - g.grad_w)
    e_sh = integral(np.sum((shear_h - sh_r) ** 2, axis=-1))

    report = ErrorReport(
        h=global_mesh_size(sol.geometry, mesh),
        ndof=ndof if ndof is not None else sol.ndof,
        err_theta_H1=math.sqrt(e_th + e_gth),
        err_theta_L2=math.sqrt(e_th),
        err_w_H1=math.sqrt(e_w + e_gw),
        err_w_L2=math.sqrt(e_w),
        err_shear_scaled=sol.thickness * math.sqrt(e_sh),
    )
    logger.debug("errors on %s mesh: %s", mesh.shape, report)
    return report


def kirchhoff_defect(sol: DiscreteSolution, q: int | None = None) -> float:
    """||theta_h - grad w_h||_{L2}."""
    q = q or sol.spaces.degree + 2
    us, vs, _, measure = _mesh_quadrature(sol.spaces.mesh, sol.geometry, q)
    g = evaluate_grid(sol, us, vs)
    return math.sqrt(float(np.sum(measure * np.sum((g.theta - g.grad_w) ** 2, axis=-1))))


# ─── Discrete norms ──────────────────────────────────────────────────────────

def _per_element(values: np.ndarray, measure: np.ndarray, mesh: ParametricMesh, q: int) -> np.ndarray:
    n_u, n_v = mesh.shape
    return to_elements(measure * values, n_u, n_v, q).sum(axis=-1)


def triple_norm_rot(
    fields: DiscreteSolution,
    mesh: ParametricMesh,
    t: float,
    geometry: GeometryMap | None = None,
    q: int = 5,
) -> float:
    """
    Squared rotation/deflection norm
        ||eta||_{H1}^2 + sum_K (t^2 + h_K^2)^{-1} ||grad v - eta||_{L2(K)}^2
    with eta = fields.theta and v = fields.w.
    """
    geometry = geometry or fields.geometry
    us, vs, _, measure = _mesh_quadrature(mesh, geometry, q)
    g = fields.evaluate_grid(us, vs)
    h1 = float(np.sum(measure * (np.sum(g.theta ** 2, axis=-1) + np.sum(g.grad_theta ** 2, axis=(-2, -1)))))
    mismatch = _per_element(np.sum((g.grad_w - g.theta) ** 2, axis=-1), measure, mesh, q)
    h_k = element_diameters(geometry, mesh)
    return h1 + float(np.sum(mismatch / (t ** 2 + h_k ** 2)))


def triple_norm_shear(
    shear,
    mesh: ParametricMesh,
    t: float,
    geometry: GeometryMap,
    q: int = 5,
) -> float:
    """Squared shear norm t^2 ||s||^2 + sum_K h_K^2 ||s||_{L2(K)}^2."""
    us, vs, _, measure = _mesh_quadrature(mesh, geometry, q)
    s = shear.evaluate_grid(us, vs)
    per_element = _per_element(np.sum(s ** 2, axis=-1), measure, mesh, q)
    h_k = element_diameters(geometry, mesh)
    return float(t ** 2 * per_element.sum() + np.sum(h_k ** 2 * per_element))


# ─── Rates ───────────────────────────────────────────────────────────────────

def convergence_slope(errors: Sequence[float], hs: Sequence[float]) -> list[float | None]:
    """slope_i = log(e_i / e_{i+1}) / log(h_i / h_{i+1}); None where undefined."""
    if len(errors) != len(hs):
        raise ParameterError(f"errors and hs must have equal length, got {len(errors)} and {len(hs)}")
    if any(h <= 0 for h in hs):
        raise ParameterError("mesh sizes must be positive")
    slopes: list[float | None] = []
    for (e0, e1), (h0, h1) in zip(zip(errors[:-1], errors[1:]), zip(hs[:-1], hs[1:])):
        if e0 <= 0 or e1 <= 0 or h0 <= h1:
            slopes.append(None)
        else:
            slopes.append(math.log(e0 / e1) / math.log(h0 / h1))
    return slopes


def fitted_rate(errors: Sequence[float], hs: Sequence[float], floor: float = ROUNDOFF_FLOOR) -> float:
    """Least-squares slope of log(error) against log(h), ignoring errors below floor."""
    pairs = [(h, e) for h, e in zip(hs, errors) if e > floor and h > 0]
    if len(pairs) < 2:
        raise ParameterError("need at least two levels above the round-off floor to fit a rate")
    log_h = np.log([[h] for h, _ in pairs])
    log_e = np.log([e for _, e in pairs])
    model = LinearRegression().fit(log_h, log_e)
    return float(model.coef_[0])
