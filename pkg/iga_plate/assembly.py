"""
Galerkin assembly of the primal plate problem

    a(theta, eta) + mu k t^-2 (theta - grad w, eta - grad v) = (f, v)

over the physical mesh, with rotations pushed forward covariantly and the
deflection as a scalar. Constrained degrees of freedom (all homogeneous)
are eliminated by row/column removal so the reduced matrix stays SPD.

The mixed bilinear form B is evaluated by quadrature for diagnostics.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np
import scipy.sparse as sp

from iga_plate.core import SINGULAR_TOL, AssemblyError, ParameterError
from iga_plate.geometry import (
    GeometryMap,
    MapGrid,
    evaluate_map_grid,
    push_covariant,
    push_gradient,
)
from iga_plate.spaces import BoundarySpec, ConstraintSet, ParametricMesh, PlateSpaces, TensorSpace
from iga_plate.splines import eval_basis_on_elements

logger = logging.getLogger(__name__)

LoadFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]

ELEMENT_CHUNK = 256


# ─── Material law ────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class MaterialParams:
    E: float = 1.092e7
    nu: float = 0.3
    k_shear: float = 5.0 / 6.0

    def __post_init__(self) -> None:
        if self.E <= 0:
            raise ParameterError(f"Young's modulus E must be positive, got {self.E}")
        if not 0.0 < self.nu < 0.5:
            raise ParameterError(f"Poisson ratio nu must lie in (0, 0.5), got {self.nu}")
        if self.k_shear <= 0:
            raise ParameterError(f"shear correction factor k must be positive, got {self.k_shear}")

    @property
    def mu(self) -> float:
        return self.E / (2.0 * (1.0 + self.nu))

    @property
    def d_bend(self) -> float:
        return self.E / (12.0 * (1.0 - self.nu ** 2))

    @property
    def voigt(self) -> np.ndarray:
        """C in Voigt form acting on (e11, e22, 2 e12)."""
        nu = self.nu
        return self.d_bend * np.array([
            [1.0, nu, 0.0],
            [nu, 1.0, 0.0],
            [0.0, 0.0, 0.5 * (1.0 - nu)],
        ])

    def shear_coefficient(self, t: float) -> float:
        return self.mu * self.k_shear / t ** 2


def bending_stress(material: MaterialParams, strain: np.ndarray) -> np.ndarray:
    """C eps = D [(1 - nu) eps + nu tr(eps) I] for symmetric 2x2 (or stacked) strains."""
    strain = np.asarray(strain, dtype=float)
    trace = np.trace(strain, axis1=-2, axis2=-1)[..., None, None]
    return material.d_bend * ((1.0 - material.nu) * strain + material.nu * trace * np.eye(2))


# ─── Problem and system ──────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class PlateProblem:
    material: MaterialParams
    thickness: float
    geometry: GeometryMap
    bc: BoundarySpec
    load: LoadFunction

    def __post_init__(self) -> None:
        if not self.thickness > 0:
            raise ParameterError(f"thickness t must be positive, got {self.thickness}")

    @property
    def shear_coefficient(self) -> float:
        return self.material.shear_coefficient(self.thickness)


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """Reduced system over the free (theta1, theta2, w) degrees of freedom."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    free_dofs: np.ndarray
    spaces: PlateSpaces

    @property
    def size(self) -> int:
        return self.rhs.size

    def expand(self, x_free: np.ndarray) -> np.ndarray:
        """Free solution -> full (theta1, theta2, w) vector with zeros at constrained slots."""
        full = np.zeros(self.spaces.ndof)
        full[self.free_dofs] = x_free
        return full


# ─── Element data ────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class _SpaceOnElements:
    first_u: np.ndarray
    first_v: np.ndarray
    values_u: np.ndarray
    values_v: np.ndarray
    n_u: int

    @classmethod
    def build(cls, space: TensorSpace, pu: np.ndarray, pv: np.ndarray) -> "_SpaceOnElements":
        first_u, values_u = eval_basis_on_elements(space.kv_u, pu, 1)
        first_v, values_v = eval_basis_on_elements(space.kv_v, pv, 1)
        return cls(first_u, first_v, values_u, values_v, space.shape[0])

    def local(self, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(global indices (E, n), phi, dphi/du, dphi/dv each (E, Q, n)) for elements (a, b)."""
        nu_loc = self.values_u.shape[-1]
        nv_loc = self.values_v.shape[-1]
        iu = self.first_u[a][:, None] + np.arange(nu_loc)[None, :]
        jv = self.first_v[b][:, None] + np.arange(nv_loc)[None, :]
        # local index k * nv_loc + l for the pair (k, l)
        idx = (iu[:, :, None] + self.n_u * jv[:, None, :]).reshape(a.size, -1)
        u0, u1 = self.values_u[0][a], self.values_u[1][a]
        v0, v1 = self.values_v[0][b], self.values_v[1][b]

        def tensor(x: np.ndarray, y: np.ndarray) -> np.ndarray:
            out = np.einsum("egk,ehl->eghkl", x, y)
            e, q1, q2 = out.shape[:3]
            return out.reshape(e, q1 * q2, nu_loc * nv_loc)

        return idx, tensor(u0, v0), tensor(u1, v0), tensor(u0, v1)


@dataclass(frozen=True, eq=False)
class QuadratureData:
    """Per-element quadrature and map data, arrays indexed (element_u, element_v, point)."""

    mesh: ParametricMesh
    q: int
    pu: np.ndarray
    pv: np.ndarray
    weights: np.ndarray
    points: np.ndarray
    det: np.ndarray
    inverse: np.ndarray
    inverse_derivative: np.ndarray

    def element_arrays(self, a: np.ndarray, b: np.ndarray) -> dict[str, np.ndarray]:
        return {
            "weights": self.weights[a, b],
            "points": self.points[a, b],
            "det": self.det[a, b],
            "inverse": self.inverse[a, b],
            "inverse_derivative": self.inverse_derivative[a, b],
        }


def to_elements(grid_array: np.ndarray, n_u: int, n_v: int, q: int) -> np.ndarray:
    """(n_u q, n_v q, ...) grid -> (n_u, n_v, q*q, ...) with point index g*q + h."""
    tail = grid_array.shape[2:]
    x = grid_array.reshape((n_u, q, n_v, q) + tail)
    x = np.moveaxis(x, 2, 1)
    return x.reshape((n_u, n_v, q * q) + tail)


def quadrature_data(geometry: GeometryMap, mesh: ParametricMesh, q: int) -> QuadratureData:
    pu, wu, pv, wv = mesh.quadrature(q)
    n_u, n_v = mesh.shape
    grid: MapGrid = evaluate_map_grid(geometry, pu.ravel(), pv.ravel(), check=False)
    det = to_elements(grid.det, n_u, n_v, q)
    bad = ~(np.abs(det) > SINGULAR_TOL)
    if np.any(bad):
        a, b, _ = np.argwhere(bad)[0]
        raise AssemblyError(f"singular geometry map inside element ({a}, {b})", element=(int(a), int(b)))
    weights = to_elements(np.outer(wu.ravel(), wv.ravel()), n_u, n_v, q)
    return QuadratureData(
        mesh=mesh,
        q=q,
        pu=pu,
        pv=pv,
        weights=weights,
        points=to_elements(grid.points, n_u, n_v, q),
        det=det,
        inverse=to_elements(grid.inverse, n_u, n_v, q),
        inverse_derivative=to_elements(grid.inverse_derivative, n_u, n_v, q),
    )


# ─── Local matrices ──────────────────────────────────────────────────────────

def _rotation_basis(
    phi: np.ndarray, phi_u: np.ndarray, phi_v: np.ndarray, component: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Parametric vector basis (phi e_c) and its parametric Jacobian."""
    vhat = np.zeros(phi.shape + (2,))
    vhat[..., component] = phi
    dvhat = np.zeros(phi.shape + (2, 2))
    dvhat[..., component, 0] = phi_u
    dvhat[..., component, 1] = phi_v
    return vhat, dvhat


def _voigt(grad: np.ndarray) -> np.ndarray:
    return np.stack([grad[..., 0, 0], grad[..., 1, 1], grad[..., 0, 1] + grad[..., 1, 0]], axis=-1)


def _chunk_contribution(
    problem: PlateProblem,
    quad: QuadratureData,
    blocks: list[tuple[_SpaceOnElements, int, int | None]],
    a: np.ndarray,
    b: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    data = quad.element_arrays(a, b)
    inv = data["inverse"][:, :, None]
    d_inv = data["inverse_derivative"][:, :, None]
    measure = data["weights"] * np.abs(data["det"])

    indices, strains, shears, w_values = [], [], [], []
    for space_data, offset, component in blocks:
        idx, phi, phi_u, phi_v = space_data.local(a, b)
        indices.append(idx + offset)
        if component is None:
            grad = push_gradient(inv, np.stack([phi_u, phi_v], axis=-1))
            strains.append(np.zeros(phi.shape + (3,)))
            shears.append(-grad)
            w_values.append(phi)
        else:
            vhat, dvhat = _rotation_basis(phi, phi_u, phi_v, component)
            theta, grad_theta = push_covariant(inv, d_inv, vhat, dvhat)
            strains.append(_voigt(grad_theta))
            shears.append(theta)
            w_values.append(np.zeros_like(phi))

    idx = np.concatenate(indices, axis=1)
    strain = np.concatenate(strains, axis=2)
    shear = np.concatenate(shears, axis=2)
    phi_w = np.concatenate(w_values, axis=2)
    n_el, n_q, n_loc = phi_w.shape

    stress = strain @ problem.material.voigt
    lhs = (stress * measure[:, :, None, None]).transpose(0, 2, 1, 3).reshape(n_el, n_loc, -1)
    rhs_ = strain.transpose(0, 2, 1, 3).reshape(n_el, n_loc, -1)
    k_local = lhs @ rhs_.transpose(0, 2, 1)

    sh = (shear * measure[:, :, None, None]).transpose(0, 2, 1, 3).reshape(n_el, n_loc, -1)
    sh_plain = shear.transpose(0, 2, 1, 3).reshape(n_el, n_loc, -1)
    k_local += problem.shear_coefficient * (sh @ sh_plain.transpose(0, 2, 1))

    x, y = data["points"][..., 0], data["points"][..., 1]
    f = np.broadcast_to(np.asarray(problem.load(x, y), dtype=float), x.shape)
    f_local = np.einsum("eqk,eq->ek", phi_w, f * measure)

    rows = np.repeat(idx[:, :, None], n_loc, axis=2)
    cols = np.repeat(idx[:, None, :], n_loc, axis=1)
    return rows.ravel(), cols.ravel(), k_local.ravel(), idx.ravel(), f_local.ravel()


def assemble_operator(
    problem: PlateProblem,
    spaces: PlateSpaces,
    q: int | None = None,
    workers: int = 1,
) -> tuple[sp.csr_matrix, np.ndarray]:
    """Full symmetric matrix and load vector over (theta1, theta2, w), before constraints."""
    mesh = spaces.mesh
    if mesh is None:
        raise ParameterError("plate spaces carry no mesh; build them with make_plate_spaces")
    q = q or spaces.degree + 1
    quad = quadrature_data(problem.geometry, mesh, q)
    o1, o2, o3 = spaces.offsets
    blocks = [
        (_SpaceOnElements.build(spaces.theta1, quad.pu, quad.pv), o1, 0),
        (_SpaceOnElements.build(spaces.theta2, quad.pu, quad.pv), o2, 1),
        (_SpaceOnElements.build(spaces.w, quad.pu, quad.pv), o3, None),
    ]
    n_u, n_v = mesh.shape
    aa, bb = np.meshgrid(np.arange(n_u), np.arange(n_v), indexing="ij")
    aa, bb = aa.ravel(), bb.ravel()
    chunks = [
        (aa[s: s + ELEMENT_CHUNK], bb[s: s + ELEMENT_CHUNK])
        for s in range(0, aa.size, ELEMENT_CHUNK)
    ]

    n = spaces.ndof
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda c: _chunk_contribution(problem, quad, blocks, *c), chunks))
    else:
        results = [_chunk_contribution(problem, quad, blocks, *chunk) for chunk in chunks]

    rows, cols, vals, f_idx, f_vals = (np.concatenate(parts) for parts in zip(*results))
    # duplicate (row, col) pairs are summed by the conversion
    matrix = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    rhs = np.bincount(f_idx, weights=f_vals, minlength=n)

    logger.info(
        "assembled %d x %d plate operator on %d x %d mesh (p=%d, q=%d, nnz=%d)",
        n, n, n_u, n_v, spaces.degree, q, matrix.nnz,
    )
    return matrix, rhs


def assemble_system(
    problem: PlateProblem,
    spaces: PlateSpaces,
    constraints: ConstraintSet,
    q: int | None = None,
    workers: int = 1,
) -> LinearSystem:
    matrix, rhs = assemble_operator(problem, spaces, q=q, workers=workers)
    free = constraints.free_dofs(spaces)
    reduced = matrix[free][:, free].tocsr()
    return LinearSystem(matrix=reduced, rhs=rhs[free], free_dofs=free, spaces=spaces)


# ─── Mixed form ──────────────────────────────────────────────────────────────

class RotationDeflection(Protocol):
    """Anything evaluating (w, grad w, theta, grad theta) on a parametric tensor grid."""

    def evaluate_grid(self, us: np.ndarray, vs: np.ndarray): ...


class ShearLike(Protocol):
    def evaluate_grid(self, us: np.ndarray, vs: np.ndarray) -> np.ndarray: ...


class MixedTripleLike(Protocol):
    fields: RotationDeflection
    shear: ShearLike


def _sym(grad: np.ndarray) -> np.ndarray:
    return 0.5 * (grad + np.swapaxes(grad, -1, -2))


def mixed_form_value(
    problem: PlateProblem,
    sol_a: MixedTripleLike,
    sol_b: MixedTripleLike,
    mesh: ParametricMesh,
    q: int = 4,
) -> float:
    """
    B(beta, u, tau; eta, v, s) = a(beta, eta) + (tau, eta - grad v)
                                 + (beta - grad u, s) - t^2/(mu k) (tau, s).
    """
    pu, wu, pv, wv = mesh.quadrature(q)
    us, vs = pu.ravel(), pv.ravel()
    grid = evaluate_map_grid(problem.geometry, us, vs)
    measure = np.outer(wu.ravel(), wv.ravel()) * np.abs(grid.det)

    fa, fb = sol_a.fields.evaluate_grid(us, vs), sol_b.fields.evaluate_grid(us, vs)
    tau, s = sol_a.shear.evaluate_grid(us, vs), sol_b.shear.evaluate_grid(us, vs)

    stress = bending_stress(problem.material, _sym(fa.grad_theta))
    bending = np.sum(stress * _sym(fb.grad_theta), axis=(-2, -1))
    coupling_b = np.sum(tau * (fb.theta - fb.grad_w), axis=-1)
    coupling_a = np.sum((fa.theta - fa.grad_w) * s, axis=-1)
    penalty = np.sum(tau * s, axis=-1) / problem.shear_coefficient
    return float(np.sum(measure * (bending + coupling_b + coupling_a - penalty)))


def load_functional(problem: PlateProblem, fields: RotationDeflection, mesh: ParametricMesh, q: int = 4) -> float:
    """(f, v) by quadrature."""
    pu, wu, pv, wv = mesh.quadrature(q)
    us, vs = pu.ravel(), pv.ravel()
    grid = evaluate_map_grid(problem.geometry, us, vs)
    measure = np.outer(wu.ravel(), wv.ravel()) * np.abs(grid.det)
    f = problem.load(grid.points[..., 0], grid.points[..., 1])
    return float(np.sum(measure * f * fields.evaluate_grid(us, vs).w))
