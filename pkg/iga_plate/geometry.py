"""
Single-patch geometry parametrisations F : (0,1)^2 -> Omega.

Maps are B-spline or NURBS surfaces stored as homogeneous control nets.
Evaluation returns F, the Jacobian DF, its second derivatives (needed by the
gradient of covariant rotation fields) and DF^{-T}. Scalar fields are pushed
forward with gradients mapped by DF^{-T}; rotation fields use the covariant
map v = DF^{-T} v_hat, which preserves vanishing tangential components.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from iga_plate.core import KNOT_TOL, SINGULAR_TOL, ParameterError, SingularMapError
from iga_plate.splines import (
    KnotVector,
    basis_matrix,
    degree_elevate,
    insert_knots,
    make_knot_vector,
    transfer_matrix,
    with_regularity,
)

logger = logging.getLogger(__name__)


# ─── Types ───────────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class GeometryMap:
    kv_u: KnotVector
    kv_v: KnotVector
    control_points: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        n1, n2 = self.kv_u.dimension, self.kv_v.dimension
        cp = np.asarray(self.control_points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if cp.shape != (n1, n2, 2):
            raise ParameterError(f"control_points must have shape {(n1, n2, 2)}, got {cp.shape}")
        if w.shape != (n1, n2):
            raise ParameterError(f"weights must have shape {(n1, n2)}, got {w.shape}")
        if np.any(w <= 0.0):
            raise ParameterError("NURBS weights must be positive")
        cp.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "control_points", cp)
        object.__setattr__(self, "weights", w)

    @property
    def is_rational(self) -> bool:
        return not np.allclose(self.weights, 1.0)


@dataclass(frozen=True)
class MapSample:
    physical_point: np.ndarray
    jacobian: np.ndarray
    det: float
    inv_transpose: np.ndarray
    hessian: np.ndarray


@dataclass(frozen=True)
class MapGrid:
    """
    Map data on a tensor grid (Pu, Pv).

    jacobian[..., a, b] = dF_a / du_b and hessian[..., a, b, c] = d^2 F_a / du_b du_c.
    """

    points: np.ndarray
    jacobian: np.ndarray
    hessian: np.ndarray
    det: np.ndarray
    inverse: np.ndarray

    @property
    def inv_transpose(self) -> np.ndarray:
        return np.swapaxes(self.inverse, -1, -2)

    @property
    def inverse_derivative(self) -> np.ndarray:
        """out[..., b, i, j] = d(DF^{-1})_{ij} / du_b."""
        dj = np.moveaxis(self.hessian, -1, -3)
        inv = self.inverse[..., None, :, :]
        return -inv @ dj @ inv


# ─── Push-forwards on arrays ─────────────────────────────────────────────────
# Arrays broadcast over leading axes; `inverse` is DF^{-1}, so DF^{-T} v = inverse^T v.

def push_gradient(inverse: np.ndarray, parametric_gradient: np.ndarray) -> np.ndarray:
    return np.einsum("...ba,...b->...a", inverse, parametric_gradient)


def push_covariant(
    inverse: np.ndarray,
    inverse_derivative: np.ndarray,
    vhat: np.ndarray,
    dvhat: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Covariant field v = DF^{-T} vhat and its physical gradient grad[a, g] = dv_a/dx_g.

    dvhat[..., c, b] = d vhat_c / du_b.
    """
    v = np.einsum("...ca,...c->...a", inverse, vhat)
    dv_du = (
        np.einsum("...bca,...c->...ab", inverse_derivative, vhat)
        + np.einsum("...ca,...cb->...ab", inverse, dvhat)
    )
    return v, np.einsum("...ab,...bg->...ag", dv_du, inverse)


# ─── Constructors ────────────────────────────────────────────────────────────

def _linear_kv() -> KnotVector:
    return make_knot_vector(1, (0.0, 1.0), 1)


def unit_square_map() -> GeometryMap:
    return affine_square_map(1.0)


def affine_square_map(scale: float = 1.0) -> GeometryMap:
    """F(u, v) = scale * (u, v)."""
    if scale <= 0:
        raise ParameterError(f"scale must be positive, got {scale}")
    cp = np.zeros((2, 2, 2))
    for i in range(2):
        for j in range(2):
            cp[i, j] = (scale * i, scale * j)
    return GeometryMap(_linear_kv(), _linear_kv(), cp, np.ones((2, 2)))


def quarter_annulus_map(r_in: float = 1.0, r_out: float = 2.5) -> GeometryMap:
    """
    Exact quarter annulus: u runs along the 90 degree arc from the x-axis to
    the y-axis (rational quadratic), v runs radially from r_in to r_out.
    """
    if not 0.0 < r_in < r_out:
        raise ParameterError(f"radii must satisfy 0 < r_in < r_out, got r_in={r_in}, r_out={r_out}")
    arc = np.array([[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    arc_weights = np.array([1.0, np.sqrt(2.0) / 2.0, 1.0])
    radii = np.array([r_in, r_out])
    cp = arc[:, None, :] * radii[None, :, None]
    weights = np.repeat(arc_weights[:, None], 2, axis=1)
    return GeometryMap(make_knot_vector(2, (0.0, 1.0), 1), _linear_kv(), cp, weights)


# ─── Evaluation ──────────────────────────────────────────────────────────────

def evaluate_map_grid(
    G: GeometryMap, us: np.ndarray, vs: np.ndarray, check: bool = True,
) -> MapGrid:
    us = np.atleast_1d(np.asarray(us, dtype=float))
    vs = np.atleast_1d(np.asarray(vs, dtype=float))
    bu = basis_matrix(G.kv_u, us, 2)
    bv = basis_matrix(G.kv_v, vs, 2)
    pw = G.control_points * G.weights[..., None]

    def numer(a: int, b: int) -> np.ndarray:
        return np.einsum("ui,vj,ijc->uvc", bu[a], bv[b], pw, optimize=True)

    def denom(a: int, b: int) -> np.ndarray:
        return np.einsum("ui,vj,ij->uv", bu[a], bv[b], G.weights, optimize=True)[..., None]

    w00, w10, w01 = denom(0, 0), denom(1, 0), denom(0, 1)
    w20, w11, w02 = denom(2, 0), denom(1, 1), denom(0, 2)
    f = numer(0, 0) / w00
    f_u = (numer(1, 0) - w10 * f) / w00
    f_v = (numer(0, 1) - w01 * f) / w00
    f_uu = (numer(2, 0) - w20 * f - 2.0 * w10 * f_u) / w00
    f_uv = (numer(1, 1) - w11 * f - w10 * f_v - w01 * f_u) / w00
    f_vv = (numer(0, 2) - w02 * f - 2.0 * w01 * f_v) / w00

    jac = np.stack([f_u, f_v], axis=-1)
    hess = np.stack(
        [np.stack([f_uu, f_uv], axis=-1), np.stack([f_uv, f_vv], axis=-1)], axis=-2,
    )
    det = jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]
    bad = np.abs(det) <= SINGULAR_TOL
    if check and np.any(bad):
        iu, iv = np.argwhere(bad)[0]
        raise SingularMapError(
            f"geometry map is singular at (u, v)=({us[iu]:.6g}, {vs[iv]:.6g}), det={det[iu, iv]:.3e}"
        )
    inv = np.empty_like(jac)
    if not check:
        det = np.where(bad, np.nan, det)
    inv[..., 0, 0] = jac[..., 1, 1] / det
    inv[..., 1, 1] = jac[..., 0, 0] / det
    inv[..., 0, 1] = -jac[..., 0, 1] / det
    inv[..., 1, 0] = -jac[..., 1, 0] / det
    return MapGrid(points=f, jacobian=jac, hessian=hess, det=det, inverse=inv)


def evaluate_map(G: GeometryMap, uhat: tuple[float, float] | np.ndarray) -> MapSample:
    u, v = float(uhat[0]), float(uhat[1])
    grid = evaluate_map_grid(G, np.array([u]), np.array([v]))
    return MapSample(
        physical_point=grid.points[0, 0],
        jacobian=grid.jacobian[0, 0],
        det=float(grid.det[0, 0]),
        inv_transpose=grid.inv_transpose[0, 0],
        hessian=grid.hessian[0, 0],
    )


def push_forward_scalar(
    G: GeometryMap, uhat: tuple[float, float], value: float, parametric_gradient: np.ndarray,
) -> tuple[float, np.ndarray]:
    sample = evaluate_map(G, uhat)
    return value, sample.inv_transpose @ np.asarray(parametric_gradient, dtype=float)


def covariant_push_forward(
    G: GeometryMap, uhat: tuple[float, float], parametric_vector: np.ndarray,
) -> np.ndarray:
    sample = evaluate_map(G, uhat)
    return sample.inv_transpose @ np.asarray(parametric_vector, dtype=float)


def invert_map(
    G: GeometryMap, x: np.ndarray, guess: tuple[float, float] = (0.5, 0.5), tol: float = 1e-13,
) -> np.ndarray:
    """Newton iteration for F^{-1}(x); used by finite-difference oracles."""
    uhat = np.asarray(guess, dtype=float)
    for _ in range(50):
        sample = evaluate_map(G, np.clip(uhat, 0.0, 1.0))
        step = np.linalg.solve(sample.jacobian, np.asarray(x) - sample.physical_point)
        uhat = np.clip(uhat + step, 0.0, 1.0)
        if np.linalg.norm(step) < tol:
            break
    return uhat


# ─── Exact refinement of the representation ──────────────────────────────────

def _transfer(G: GeometryMap, kv_u: KnotVector, kv_v: KnotVector) -> GeometryMap:
    t_u = transfer_matrix(G.kv_u, kv_u)
    t_v = transfer_matrix(G.kv_v, kv_v)
    pw = G.control_points * G.weights[..., None]
    new_w = t_u @ G.weights @ t_v.T
    new_pw = np.einsum("ai,ijc,bj->abc", t_u, pw, t_v)
    return GeometryMap(kv_u, kv_v, new_pw / new_w[..., None], new_w)


def refine_geometry(G: GeometryMap, breakpoints_u: list[float], breakpoints_v: list[float]) -> GeometryMap:
    """Insert the breakpoints not yet present; the map itself is unchanged."""
    new_u = [b for b in breakpoints_u if 0.0 < b < 1.0 and b not in G.kv_u.breakpoints]
    new_v = [b for b in breakpoints_v if 0.0 < b < 1.0 and b not in G.kv_v.breakpoints]
    kv_u = insert_knots(G.kv_u, new_u) if new_u else G.kv_u
    kv_v = insert_knots(G.kv_v, new_v) if new_v else G.kv_v
    return _transfer(G, kv_u, kv_v)


def elevate_geometry(G: GeometryMap, p_u: int, p_v: int) -> GeometryMap:
    return _transfer(G, degree_elevate(G.kv_u, p_u), degree_elevate(G.kv_v, p_v))


def refine_to_mesh(
    G: GeometryMap, p: int, alpha: int, breakpoints_u: list[float], breakpoints_v: list[float],
) -> GeometryMap:
    """Degree elevation to p, knot repetition down to regularity alpha, then knot insertion."""
    G = elevate_geometry(G, max(p, G.kv_u.degree), max(p, G.kv_v.degree))
    G = _transfer(
        G,
        with_regularity(G.kv_u, min(alpha, G.kv_u.regularity)),
        with_regularity(G.kv_v, min(alpha, G.kv_v.regularity)),
    )
    return refine_geometry(G, list(breakpoints_u), list(breakpoints_v))


# ─── Control-net text format ─────────────────────────────────────────────────

def _knot_vector_from_knots(p: int, knots: np.ndarray, label: str) -> KnotVector:
    knots = np.sort(knots)
    starts = np.concatenate([[True], np.diff(knots) > KNOT_TOL])
    values = knots[starts]
    counts = np.diff(np.append(np.flatnonzero(starts), knots.size))
    if abs(values[0]) > KNOT_TOL or abs(values[-1] - 1.0) > KNOT_TOL or counts[0] != p + 1 or counts[-1] != p + 1:
        raise ParameterError(f"{label} knots must form an open knot vector on [0, 1] with degree {p}")
    interior = counts[1:-1]
    if interior.size and np.any(interior != interior[0]):
        raise ParameterError(f"{label} knots must have uniform interior multiplicity, got {interior.tolist()}")
    r = int(interior[0]) if interior.size else 1
    return make_knot_vector(p, values.tolist(), r)


def _data_lines(text: str) -> list[str]:
    lines = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    return lines


def read_control_net(path: str | Path) -> GeometryMap:
    lines = _data_lines(Path(path).read_text(encoding="utf-8"))
    if len(lines) < 3:
        raise ParameterError(f"control net {path} is truncated")
    header = lines[0].split()
    if len(header) != 4:
        raise ParameterError("control net header must read 'p_u p_v n_knots_u n_knots_v'")
    p_u, p_v, nk_u, nk_v = (int(h) for h in header)
    knots_u = np.array(lines[1].split(), dtype=float)
    knots_v = np.array(lines[2].split(), dtype=float)
    if knots_u.size != nk_u or knots_v.size != nk_v:
        raise ParameterError("knot counts in the header do not match the knot lines")
    kv_u = _knot_vector_from_knots(p_u, knots_u, "u")
    kv_v = _knot_vector_from_knots(p_v, knots_v, "v")
    rows = np.array([line.split() for line in lines[3:]], dtype=float)
    n1, n2 = kv_u.dimension, kv_v.dimension
    if rows.shape != (n1 * n2, 3):
        raise ParameterError(f"expected {n1 * n2} control rows 'x y w', got {rows.shape[0]}")
    net = rows.reshape(n2, n1, 3).transpose(1, 0, 2)
    logger.info("read %s control net %d x %d from %s", "NURBS" if np.any(net[..., 2] != 1) else "B-spline", n1, n2, path)
    return GeometryMap(kv_u, kv_v, net[..., :2], net[..., 2])


def write_control_net(G: GeometryMap, path: str | Path) -> None:
    n1, n2 = G.kv_u.dimension, G.kv_v.dimension
    out = [
        f"{G.kv_u.degree} {G.kv_v.degree} {G.kv_u.knots.size} {G.kv_v.knots.size}",
        " ".join(f"{k:.17g}" for k in G.kv_u.knots),
        " ".join(f"{k:.17g}" for k in G.kv_v.knots),
    ]
    for j in range(n2):
        for i in range(n1):
            x, y = G.control_points[i, j]
            out.append(f"{x:.17g} {y:.17g} {G.weights[i, j]:.17g}")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")
