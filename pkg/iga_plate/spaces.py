"""
Tensor-product spline spaces on the parametric mesh and the compatible
deflection / rotation spaces of the plate discretisation.

The rotation space is built component-wise so that the gradient of every
deflection lies in it exactly:

    W      = S^{p,p}_{a,a}
    Theta1 = S^{p-1,p}_{a-1,a}
    Theta2 = S^{p,p-1}_{a,a-1}

Boundary conditions are imposed by removing basis functions that do not
vanish on the constrained parametric sides.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Sequence

import numpy as np

from iga_plate.core import BoundaryError, ParameterError
from iga_plate.splines import (
    KnotVector,
    basis_matrix,
    differentiation_matrix,
    element_quadrature,
    make_knot_vector,
    uniform_breakpoints,
)

logger = logging.getLogger(__name__)

QUASI_UNIFORMITY_WARNING = 0.1


# ─── Parametric mesh ─────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Element:
    index: tuple[int, int]
    u_bounds: tuple[float, float]
    v_bounds: tuple[float, float]

    @property
    def diameter(self) -> float:
        du = self.u_bounds[1] - self.u_bounds[0]
        dv = self.v_bounds[1] - self.v_bounds[0]
        return float(np.hypot(du, dv))


@dataclass(frozen=True)
class ParametricMesh:
    """Rectangular partition of (0,1)^2 induced by two breakpoint lists."""

    breakpoints_u: tuple[float, ...]
    breakpoints_v: tuple[float, ...]

    def __post_init__(self) -> None:
        for name, z in (("breakpoints_u", self.breakpoints_u), ("breakpoints_v", self.breakpoints_v)):
            arr = np.asarray(z, dtype=float)
            if arr.size < 2 or arr[0] != 0.0 or arr[-1] != 1.0 or np.any(np.diff(arr) <= 0):
                raise ParameterError(f"{name} must increase strictly from 0 to 1, got {list(z)}")

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.breakpoints_u) - 1, len(self.breakpoints_v) - 1

    @cached_property
    def elements(self) -> list[Element]:
        zu, zv = self.breakpoints_u, self.breakpoints_v
        return [
            Element((a, b), (zu[a], zu[a + 1]), (zv[b], zv[b + 1]))
            for b in range(len(zv) - 1)
            for a in range(len(zu) - 1)
        ]

    @cached_property
    def element_diameters(self) -> np.ndarray:
        """h_Q arranged as (n_elements_u, n_elements_v)."""
        du = np.diff(np.asarray(self.breakpoints_u))
        dv = np.diff(np.asarray(self.breakpoints_v))
        return np.hypot(du[:, None], dv[None, :])

    @property
    def global_h(self) -> float:
        return float(self.element_diameters.max())

    @property
    def quasi_uniformity(self) -> float:
        """sigma = min h_Q / max h_Q (reported, not enforced)."""
        h = self.element_diameters
        return float(h.min() / h.max())

    def quadrature(self, q: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        pu, wu = element_quadrature(self.breakpoints_u, q)
        pv, wv = element_quadrature(self.breakpoints_v, q)
        return pu, wu, pv, wv


def make_mesh(breakpoints_u: Sequence[float], breakpoints_v: Sequence[float]) -> ParametricMesh:
    mesh = ParametricMesh(tuple(map(float, breakpoints_u)), tuple(map(float, breakpoints_v)))
    sigma = mesh.quasi_uniformity
    if sigma < QUASI_UNIFORMITY_WARNING:
        logger.warning("mesh %s x %s has low quasi-uniformity sigma=%.3g", *mesh.shape, sigma)
    return mesh


def uniform_mesh(n_u: int, n_v: int | None = None) -> ParametricMesh:
    return make_mesh(uniform_breakpoints(n_u), uniform_breakpoints(n_v or n_u))


def refine_mesh(mesh: ParametricMesh, times: int = 1) -> ParametricMesh:
    """Uniform bisection of every element."""
    zu, zv = np.asarray(mesh.breakpoints_u), np.asarray(mesh.breakpoints_v)
    for _ in range(times):
        zu = np.sort(np.concatenate([zu, 0.5 * (zu[:-1] + zu[1:])]))
        zv = np.sort(np.concatenate([zv, 0.5 * (zv[:-1] + zv[1:])]))
    return make_mesh(zu, zv)


# ─── Tensor-product spaces ───────────────────────────────────────────────────

@dataclass(frozen=True)
class TensorSpace:
    """S^{p1,p2}_{a1,a2} with lexicographic numbering i + n1 * j."""

    kv_u: KnotVector
    kv_v: KnotVector

    @property
    def shape(self) -> tuple[int, int]:
        return self.kv_u.dimension, self.kv_v.dimension

    @property
    def ndof(self) -> int:
        return self.kv_u.dimension * self.kv_v.dimension

    @property
    def degrees(self) -> tuple[int, int]:
        return self.kv_u.degree, self.kv_v.degree

    def index(self, i: int | np.ndarray, j: int | np.ndarray) -> int | np.ndarray:
        return i + self.kv_u.dimension * j

    def to_grid(self, coeffs: np.ndarray) -> np.ndarray:
        """Coefficient vector -> array C[i, j]."""
        n1, n2 = self.shape
        return np.asarray(coeffs, dtype=float).reshape(n2, n1).T

    def from_grid(self, grid: np.ndarray) -> np.ndarray:
        return np.asarray(grid, dtype=float).T.ravel()

    def evaluate_grid(
        self, coeffs: np.ndarray, us: np.ndarray, vs: np.ndarray, nderiv: int = 0,
    ) -> np.ndarray:
        """
        Values on the tensor grid us x vs.

        Returns shape (1, Pu, Pv) for nderiv=0 and (3, Pu, Pv) holding
        (value, d/du, d/dv) for nderiv=1.
        """
        c = self.to_grid(coeffs)
        bu = basis_matrix(self.kv_u, us, nderiv)
        bv = basis_matrix(self.kv_v, vs, nderiv)
        out = [bu[0] @ c @ bv[0].T]
        if nderiv >= 1:
            out.append(bu[1] @ c @ bv[0].T)
            out.append(bu[0] @ c @ bv[1].T)
        return np.stack(out)


def make_tensor_space(
    p: tuple[int, int], r: tuple[int, int], mesh: ParametricMesh,
) -> TensorSpace:
    return TensorSpace(
        make_knot_vector(p[0], mesh.breakpoints_u, r[0]),
        make_knot_vector(p[1], mesh.breakpoints_v, r[1]),
    )


# ─── Plate spaces ────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class PlateSpaces:
    w: TensorSpace
    theta1: TensorSpace
    theta2: TensorSpace
    mesh: ParametricMesh | None = field(default=None, compare=False)

    @property
    def degree(self) -> int:
        return self.w.kv_u.degree

    @property
    def regularity(self) -> int:
        return self.w.kv_u.regularity

    @property
    def offsets(self) -> tuple[int, int, int]:
        """Start of theta1, theta2, w blocks in the global (theta1, theta2, w) numbering."""
        return 0, self.theta1.ndof, self.theta1.ndof + self.theta2.ndof

    @property
    def ndof(self) -> int:
        return self.theta1.ndof + self.theta2.ndof + self.w.ndof

    def split(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Global vector -> (theta1, theta2, w) coefficient blocks."""
        _, o2, o3 = self.offsets
        return x[:o2], x[o2:o3], x[o3:]


def make_plate_spaces(p: int, alpha: int, mesh: ParametricMesh) -> PlateSpaces:
    if p < 2:
        raise ParameterError(f"degree p must be >= 2 so that rotations contain linears, got p={p}")
    if not 1 <= alpha <= p - 1:
        raise ParameterError(
            f"regularity alpha must satisfy 1 <= alpha <= p-1 = {p - 1} "
            f"(rotation components need alpha-1 >= 0), got alpha={alpha}"
        )
    r = p - alpha
    return PlateSpaces(
        w=make_tensor_space((p, p), (r, r), mesh),
        theta1=make_tensor_space((p - 1, p), (r, r), mesh),
        theta2=make_tensor_space((p, p - 1), (r, r), mesh),
        mesh=mesh,
    )


def gradient_coefficients(spaces: PlateSpaces, w_coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exact coefficients of the parametric gradient of w in (Theta1, Theta2)."""
    c = spaces.w.to_grid(w_coeffs)
    d_u = differentiation_matrix(spaces.w.kv_u)
    d_v = differentiation_matrix(spaces.w.kv_v)
    g1 = d_u @ c
    g2 = (d_v @ c.T).T
    return spaces.theta1.from_grid(g1), spaces.theta2.from_grid(g2)


# ─── Boundary conditions ─────────────────────────────────────────────────────

class Side(str, Enum):
    U0 = "u0"
    U1 = "u1"
    V0 = "v0"
    V1 = "v1"

    @property
    def tangential_component(self) -> int:
        """Index (0 -> Theta1, 1 -> Theta2) of the covariant component tangent to the side."""
        return 1 if self in (Side.U0, Side.U1) else 0


class BoundaryKind(str, Enum):
    CLAMPED = "clamped"
    HARD = "simply_supported_hard"
    SOFT = "simply_supported_soft"
    FREE = "free"


CORNERS: dict[tuple[Side, Side], tuple[float, float]] = {
    (Side.U0, Side.V0): (0.0, 0.0),
    (Side.U1, Side.V0): (1.0, 0.0),
    (Side.U0, Side.V1): (0.0, 1.0),
    (Side.U1, Side.V1): (1.0, 1.0),
}


@dataclass(frozen=True)
class BoundarySpec:
    u0: BoundaryKind
    u1: BoundaryKind
    v0: BoundaryKind
    v1: BoundaryKind

    def __post_init__(self) -> None:
        for side in Side:
            object.__setattr__(self, side.value, BoundaryKind(getattr(self, side.value)))
        if all(self.kind(side) is BoundaryKind.FREE for side in Side):
            raise BoundaryError(
                "at least one side must be clamped or simply supported (all-free plate has a rigid-body kernel)"
            )

    @classmethod
    def uniform(cls, kind: BoundaryKind | str) -> "BoundarySpec":
        return cls(kind, kind, kind, kind)

    def kind(self, side: Side) -> BoundaryKind:
        return getattr(self, Side(side).value)

    def sides(self, *kinds: BoundaryKind) -> list[Side]:
        return [side for side in Side if self.kind(side) in kinds]


@dataclass(frozen=True)
class ConstraintSet:
    """Indices prescribed to zero in each space (sorted, unique)."""

    w: np.ndarray
    theta1: np.ndarray
    theta2: np.ndarray

    def global_constrained(self, spaces: PlateSpaces) -> np.ndarray:
        o1, o2, o3 = spaces.offsets
        return np.concatenate([self.theta1 + o1, self.theta2 + o2, self.w + o3])

    def free_dofs(self, spaces: PlateSpaces) -> np.ndarray:
        mask = np.ones(spaces.ndof, dtype=bool)
        mask[self.global_constrained(spaces)] = False
        return np.flatnonzero(mask)


def boundary_indices(space: TensorSpace, side: Side) -> np.ndarray:
    """Basis functions of the space not identically zero on a parametric side."""
    n1, n2 = space.shape
    side = Side(side)
    if side is Side.U0:
        return space.index(0, np.arange(n2))
    if side is Side.U1:
        return space.index(n1 - 1, np.arange(n2))
    if side is Side.V0:
        return space.index(np.arange(n1), 0)
    return space.index(np.arange(n1), n2 - 1)


def _collect(space: TensorSpace, sides: list[Side]) -> np.ndarray:
    if not sides:
        return np.empty(0, dtype=int)
    return np.unique(np.concatenate([boundary_indices(space, s) for s in sides])).astype(int)


def apply_boundary_conditions(spaces: PlateSpaces, bc: BoundarySpec) -> ConstraintSet:
    supported = bc.sides(BoundaryKind.CLAMPED, BoundaryKind.HARD, BoundaryKind.SOFT)
    clamped = bc.sides(BoundaryKind.CLAMPED)
    hard = bc.sides(BoundaryKind.HARD)
    # covariant push-forward keeps a vanishing parametric-tangential component vanishing
    theta1_sides = clamped + [s for s in hard if s.tangential_component == 0]
    theta2_sides = clamped + [s for s in hard if s.tangential_component == 1]
    constraints = ConstraintSet(
        w=_collect(spaces.w, supported),
        theta1=_collect(spaces.theta1, theta1_sides),
        theta2=_collect(spaces.theta2, theta2_sides),
    )
    logger.debug(
        "constraints: w=%d theta1=%d theta2=%d",
        constraints.w.size, constraints.theta1.size, constraints.theta2.size,
    )
    return constraints


# ─── Structural checks ───────────────────────────────────────────────────────

def _dense_samples(breakpoints: Sequence[float], per_element: int) -> np.ndarray:
    points, _ = element_quadrature(breakpoints, per_element)
    return points.ravel()


def _direction_fit(
    kv_w: KnotVector, kv_theta: KnotVector, samples: np.ndarray, derivative: bool,
) -> tuple[np.ndarray, np.ndarray]:
    target = basis_matrix(kv_w, samples, 1)[1 if derivative else 0]
    b_theta = basis_matrix(kv_theta, samples)[0]
    coeffs, *_ = np.linalg.lstsq(b_theta, target, rcond=None)
    return target, b_theta @ coeffs


def verify_gradient_inclusion(spaces: PlateSpaces, per_element: int = 6) -> float:
    """
    Maximum pointwise error of representing the gradient of every W basis
    function in (Theta1, Theta2) by tensor least squares on a dense grid.
    """
    zu = sorted(set(spaces.w.kv_u.breakpoints) | set(spaces.theta1.kv_u.breakpoints))
    zv = sorted(set(spaces.w.kv_v.breakpoints) | set(spaces.theta2.kv_v.breakpoints))
    su, sv = _dense_samples(zu, per_element), _dense_samples(zv, per_element)

    residual = 0.0
    for comp, theta in ((0, spaces.theta1), (1, spaces.theta2)):
        a, a_fit = _direction_fit(spaces.w.kv_u, theta.kv_u, su, derivative=comp == 0)
        b, b_fit = _direction_fit(spaces.w.kv_v, theta.kv_v, sv, derivative=comp == 1)
        for i in range(a.shape[1]):
            exact = a[:, i, None, None] * b[None, :, :]
            fitted = a_fit[:, i, None, None] * b_fit[None, :, :]
            residual = max(residual, float(np.max(np.abs(fitted - exact))))
    return residual


def check_shear_characterization(
    spaces: PlateSpaces,
    bc: BoundarySpec,
    coeffs: np.ndarray,
    n_samples: int = 41,
    tol: float = 1e-10,
) -> bool:
    """
    True iff the parametric field s in Theta_h (coefficients of Theta1 then
    Theta2) has s.t = 0 on hard-supported and clamped sides and s = 0 at the
    corners shared by a soft-supported and a clamped side.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    n1 = spaces.theta1.ndof
    if coeffs.size != n1 + spaces.theta2.ndof:
        raise ParameterError(
            f"shear coefficient vector must have {n1 + spaces.theta2.ndof} entries, got {coeffs.size}"
        )
    c1, c2 = coeffs[:n1], coeffs[n1:]
    scale = max(1.0, float(np.max(np.abs(coeffs))) if coeffs.size else 1.0)
    line = np.linspace(0.0, 1.0, n_samples)

    def field_on(us: np.ndarray, vs: np.ndarray) -> np.ndarray:
        s1 = spaces.theta1.evaluate_grid(c1, us, vs)[0]
        s2 = spaces.theta2.evaluate_grid(c2, us, vs)[0]
        return np.stack([s1, s2])

    for side in bc.sides(BoundaryKind.HARD, BoundaryKind.CLAMPED):
        if side in (Side.U0, Side.U1):
            values = field_on(np.array([0.0 if side is Side.U0 else 1.0]), line)
        else:
            values = field_on(line, np.array([0.0 if side is Side.V0 else 1.0]))
        if np.max(np.abs(values[side.tangential_component])) > tol * scale:
            return False

    for (side_u, side_v), (u, v) in CORNERS.items():
        kinds = {bc.kind(side_u), bc.kind(side_v)}
        if kinds == {BoundaryKind.SOFT, BoundaryKind.CLAMPED}:
            if np.max(np.abs(field_on(np.array([u]), np.array([v])))) > tol * scale:
                return False
    return True
