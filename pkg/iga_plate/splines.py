"""
One-dimensional B-spline machinery on open knot vectors over [0, 1].

Provides:
  - KnotVector / make_knot_vector : open knot vector with uniform interior multiplicity
  - eval_basis / basis_matrix     : Cox-de Boor values and derivatives (active span)
  - derivative_space              : S^{p-1}_{alpha-1} on the same breakpoints
  - differentiation_matrix        : exact coefficient map d/dx : S^p_alpha -> S^{p-1}_{alpha-1}
  - insert_knots / degree_elevate : refinement of the space (and transfer_matrix for coefficients)
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from iga_plate.core import (
    KNOT_TOL,
    DomainError,
    ParameterError,
    RefinementError,
    UnsupportedSpaceError,
    gauss_rule,
)

logger = logging.getLogger(__name__)


# ─── Knot vectors ────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class KnotVector:
    """Open knot vector of degree p on breakpoints Z with interior multiplicity r."""

    degree: int
    breakpoints: tuple[float, ...]
    multiplicity: int

    def __post_init__(self) -> None:
        p, r, z = self.degree, self.multiplicity, self.breakpoints
        if p < 0:
            raise ParameterError(f"degree p must be non-negative, got {p}")
        if not 1 <= r <= p + 1:
            raise ParameterError(
                f"interior multiplicity r must satisfy 1 <= r <= p+1 = {p + 1}, got {r}"
            )
        if len(z) < 2:
            raise ParameterError("breakpoints Z need at least the two end points 0 and 1")
        if abs(z[0]) > KNOT_TOL or abs(z[-1] - 1.0) > KNOT_TOL:
            raise ParameterError(f"breakpoints Z must start at 0 and end at 1, got {z[0]}..{z[-1]}")
        if any(b - a <= KNOT_TOL for a, b in zip(z[:-1], z[1:])):
            raise ParameterError(f"breakpoints Z must be strictly increasing, got {list(z)}")

    @property
    def regularity(self) -> int:
        return self.degree - self.multiplicity

    @property
    def n_breakpoints(self) -> int:
        return len(self.breakpoints)

    @property
    def n_elements(self) -> int:
        return len(self.breakpoints) - 1

    @property
    def dimension(self) -> int:
        return self.degree + 1 + (self.n_breakpoints - 2) * self.multiplicity

    @cached_property
    def knots(self) -> np.ndarray:
        p, r = self.degree, self.multiplicity
        interior = np.repeat(np.asarray(self.breakpoints[1:-1], dtype=float), r)
        xi = np.concatenate([np.zeros(p + 1), interior, np.ones(p + 1)])
        xi.setflags(write=False)
        return xi

    @cached_property
    def element_bounds(self) -> np.ndarray:
        z = np.asarray(self.breakpoints, dtype=float)
        return np.column_stack([z[:-1], z[1:]])


def make_knot_vector(p: int, breakpoints: Sequence[float], r: int) -> KnotVector:
    z = tuple(float(b) for b in breakpoints)
    return KnotVector(degree=int(p), breakpoints=z, multiplicity=int(r))


def uniform_breakpoints(n_elements: int) -> tuple[float, ...]:
    if n_elements < 1:
        raise ParameterError(f"number of elements must be positive, got {n_elements}")
    return tuple(np.linspace(0.0, 1.0, n_elements + 1).tolist())


# ─── Basis evaluation ────────────────────────────────────────────────────────

@dataclass(frozen=True)
class BasisEvaluation:
    """Active basis functions at one point: values[d, k] = B^{(d)}_{first + k}(x)."""

    first_active_index: int
    values: np.ndarray


def find_span(kv: KnotVector, x: float) -> int:
    """Knot span index with right-continuity, left limit at x = 1."""
    p, n = kv.degree, kv.dimension
    if x >= kv.knots[n] - KNOT_TOL:
        return n - 1
    span = int(np.searchsorted(kv.knots, x, side="right")) - 1
    return min(max(span, p), n - 1)


def _ders_basis_funs(knots: np.ndarray, p: int, span: int, x: float, nderiv: int) -> np.ndarray:
    # Piegl & Tiller, Algorithm A2.3
    nd = min(nderiv, p)
    ndu = np.empty((p + 1, p + 1))
    ndu[0, 0] = 1.0
    left = np.empty(p + 1)
    right = np.empty(p + 1)
    for j in range(1, p + 1):
        left[j] = x - knots[span + 1 - j]
        right[j] = knots[span + j] - x
        saved = 0.0
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved

    ders = np.zeros((nderiv + 1, p + 1))
    ders[0, :] = ndu[:, p]
    a = np.empty((2, p + 1))
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for k in range(1, nd + 1):
            d = 0.0
            rk, pk = r - k, p - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d += a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                d += a[s2, k] * ndu[r, pk]
            ders[k, r] = d
            s1, s2 = s2, s1

    factor = p
    for k in range(1, nd + 1):
        ders[k, :] *= factor
        factor *= p - k
    return ders


def _check_point(x: float) -> float:
    x = float(x)
    if not (-KNOT_TOL <= x <= 1.0 + KNOT_TOL) or np.isnan(x):
        raise DomainError(f"evaluation point x={x} lies outside [0, 1]")
    return min(max(x, 0.0), 1.0)


def eval_basis(kv: KnotVector, x: float, nderiv: int = 0) -> BasisEvaluation:
    if not 0 <= nderiv <= kv.degree:
        raise ParameterError(f"nderiv must lie in [0, p={kv.degree}], got {nderiv}")
    x = _check_point(x)
    span = find_span(kv, x)
    values = _ders_basis_funs(kv.knots, kv.degree, span, x, nderiv)
    values.setflags(write=False)
    return BasisEvaluation(first_active_index=span - kv.degree, values=values)


def basis_matrix(kv: KnotVector, xs: Sequence[float] | np.ndarray, nderiv: int = 0) -> np.ndarray:
    """Dense table B[d, i, j] = B_j^{(d)}(xs[i]); derivatives above p are zero."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    p = kv.degree
    out = np.zeros((nderiv + 1, xs.size, kv.dimension))
    for i, x in enumerate(xs):
        x = _check_point(x)
        span = find_span(kv, x)
        out[:, i, span - p: span + 1] = _ders_basis_funs(kv.knots, p, span, x, nderiv)
    return out


def element_quadrature(breakpoints: Sequence[float], q: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss points and weights mapped to every element, both of shape (n_elements, q)."""
    x, w = gauss_rule(q)
    z = np.asarray(breakpoints, dtype=float)
    lengths = np.diff(z)
    points = z[:-1, None] + lengths[:, None] * x[None, :]
    weights = lengths[:, None] * w[None, :]
    return points, weights


def eval_basis_on_elements(
    kv: KnotVector, points: np.ndarray, nderiv: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Active basis on per-element point sets.

    points has shape (n_elements, q) and every row must lie inside one
    element of kv. Returns (first, values) with first of shape (n_elements,)
    and values of shape (nderiv + 1, n_elements, q, p + 1).
    """
    p = kv.degree
    n_el, q = points.shape
    first = np.empty(n_el, dtype=int)
    values = np.zeros((nderiv + 1, n_el, q, p + 1))
    for e in range(n_el):
        span = find_span(kv, float(points[e].mean()))
        first[e] = span - p
        for g in range(q):
            values[:, e, g, :] = _ders_basis_funs(kv.knots, p, span, float(points[e, g]), nderiv)
    return first, values


def greville(kv: KnotVector) -> np.ndarray:
    p, xi = kv.degree, kv.knots
    if p == 0:
        return 0.5 * (xi[:-1] + xi[1:])
    return np.array([xi[i + 1: i + p + 1].mean() for i in range(kv.dimension)])


# ─── Space relations ─────────────────────────────────────────────────────────

def derivative_space(kv: KnotVector) -> KnotVector:
    if kv.degree == 0 or kv.regularity < 0:
        raise UnsupportedSpaceError(
            f"derivative space needs p >= 1 and alpha >= 0, got p={kv.degree}, alpha={kv.regularity}"
        )
    return KnotVector(kv.degree - 1, kv.breakpoints, kv.multiplicity)


def differentiation_matrix(kv: KnotVector) -> sp.csr_matrix:
    """Sparse (n-1) x n matrix mapping spline coefficients to derivative coefficients."""
    target = derivative_space(kv)
    p, xi, n = kv.degree, kv.knots, kv.dimension
    scale = p / (xi[p + 1: n + p] - xi[1:n])
    rows = np.repeat(np.arange(n - 1), 2)
    cols = np.column_stack([np.arange(n - 1), np.arange(1, n)]).ravel()
    vals = np.column_stack([-scale, scale]).ravel()
    return sp.csr_matrix((vals, (rows, cols)), shape=(target.dimension, n))


def insert_knots(kv: KnotVector, new_breakpoints: Sequence[float]) -> KnotVector:
    new = sorted(float(b) for b in new_breakpoints)
    for b in new:
        if not KNOT_TOL < b < 1.0 - KNOT_TOL:
            raise RefinementError(f"new breakpoint {b} must lie strictly inside (0, 1)")
        if np.min(np.abs(np.asarray(kv.breakpoints) - b)) <= KNOT_TOL:
            raise RefinementError(f"breakpoint {b} already present in the knot vector")
    if any(b - a <= KNOT_TOL for a, b in zip(new[:-1], new[1:])):
        raise RefinementError(f"duplicate breakpoints in refinement request {new}")
    merged = tuple(sorted(kv.breakpoints + tuple(new)))
    return KnotVector(kv.degree, merged, kv.multiplicity)


def bisect(kv: KnotVector, times: int = 1) -> KnotVector:
    """Uniform refinement: split every element in two, `times` times."""
    for _ in range(times):
        z = np.asarray(kv.breakpoints)
        kv = insert_knots(kv, (0.5 * (z[:-1] + z[1:])).tolist())
    return kv


def degree_elevate(kv: KnotVector, target_p: int) -> KnotVector:
    """Raise the degree keeping the regularity alpha (and hence the represented functions)."""
    if target_p < kv.degree:
        raise ParameterError(f"target_p={target_p} must be >= current degree p={kv.degree}")
    return KnotVector(target_p, kv.breakpoints, kv.multiplicity + (target_p - kv.degree))


def with_regularity(kv: KnotVector, alpha: int) -> KnotVector:
    """Knot repetition (or removal) to reach regularity alpha on the same breakpoints."""
    if not -1 <= alpha <= kv.degree - 1:
        raise ParameterError(f"regularity alpha must lie in [-1, p-1={kv.degree - 1}], got {alpha}")
    return KnotVector(kv.degree, kv.breakpoints, kv.degree - alpha)


def _sample_points(breakpoints: Sequence[float], q: int) -> np.ndarray:
    points, _ = element_quadrature(breakpoints, q)
    return points.ravel()


def transfer_matrix(kv_from: KnotVector, kv_to: KnotVector) -> np.ndarray:
    """
    Least-squares representation T of the kv_from basis in the kv_to basis,
    so that coefficients map as c_to = T @ c_from. Exact when the spaces nest.
    """
    z = sorted(set(kv_from.breakpoints) | set(kv_to.breakpoints))
    xs = _sample_points(z, max(kv_from.degree, kv_to.degree) + 2)
    a_to = basis_matrix(kv_to, xs)[0]
    a_from = basis_matrix(kv_from, xs)[0]
    t, *_ = np.linalg.lstsq(a_to, a_from, rcond=None)
    t[np.abs(t) <= KNOT_TOL * max(1.0, float(np.abs(t).max()))] = 0.0
    # open knot vectors interpolate at both ends
    t[0], t[-1] = 0.0, 0.0
    t[0, 0], t[-1, -1] = 1.0, 1.0
    return t


def representation_residual(kv_from: KnotVector, kv_to: KnotVector, n_samples: int = 7) -> float:
    """Maximum pointwise error of representing every kv_from basis function in kv_to."""
    z = sorted(set(kv_from.breakpoints) | set(kv_to.breakpoints))
    t = transfer_matrix(kv_from, kv_to)
    xs = _sample_points(z, n_samples)
    return float(np.max(np.abs(basis_matrix(kv_to, xs)[0] @ t - basis_matrix(kv_from, xs)[0])))


def derivative_residual(kv: KnotVector, n_samples: int = 7) -> float:
    """Relative least-squares residual of the analytic basis derivatives in derivative_space."""
    target = derivative_space(kv)
    xs = _sample_points(kv.breakpoints, n_samples)
    d_basis = basis_matrix(kv, xs, 1)[1]
    b_target = basis_matrix(target, xs)[0]
    coeffs, *_ = np.linalg.lstsq(b_target, d_basis, rcond=None)
    scale = max(float(np.max(np.abs(d_basis))), 1.0)
    return float(np.max(np.abs(b_target @ coeffs - d_basis))) / scale
