"""
Shared numerical utilities for all plate modules.

Provides:
  - PlateError and subclasses : exception hierarchy used across the package
  - KNOT_TOL / SINGULAR_TOL   : tolerances for knot comparison and map inversion
  - gauss_rule                : Gauss-Legendre rule on [0, 1]
  - tensor_rule               : tensor-product rule on an element
"""

from __future__ import annotations

import numpy as np

# ─── Tolerances ──────────────────────────────────────────────────────────────

KNOT_TOL = 1e-14
SINGULAR_TOL = 1e-14
MAX_GAUSS_POINTS = 30


# ─── Exceptions ──────────────────────────────────────────────────────────────

class PlateError(Exception):
    """Base class for every error raised by iga_plate."""


class ParameterError(PlateError, ValueError):
    """A construction parameter is out of its admissible range."""


class DomainError(ParameterError):
    """An evaluation point lies outside the parametric domain."""


class RefinementError(ParameterError):
    """Breakpoints to insert are duplicated or outside (0, 1)."""


class UnsupportedSpaceError(ParameterError):
    """The requested space relation does not exist for this knot vector."""


class BoundaryError(ParameterError):
    """A boundary specification admits a rigid-body kernel or is malformed."""


class ConfigError(ParameterError):
    """A run configuration failed schema validation."""


class SingularMapError(PlateError, ArithmeticError):
    """The geometry Jacobian is (numerically) singular."""


class AssemblyError(PlateError):
    """Assembly failed on a specific element."""

    def __init__(self, message: str, element: tuple[int, int] | None = None) -> None:
        super().__init__(message)
        self.element = element


class SolverError(PlateError, RuntimeError):
    """Linear solve broke down or did not reach the requested residual."""

    def __init__(self, message: str, residual: float = float("nan")) -> None:
        super().__init__(f"{message} (achieved backward error {residual:.3e})")
        self.residual = residual


# ─── Quadrature ──────────────────────────────────────────────────────────────

def gauss_rule(q: int) -> tuple[np.ndarray, np.ndarray]:
    """q-point Gauss-Legendre rule on [0, 1], exact for degree 2q-1."""
    if not isinstance(q, (int, np.integer)) or not 1 <= q <= MAX_GAUSS_POINTS:
        raise ParameterError(
            f"quadrature order q must be an integer in [1, {MAX_GAUSS_POINTS}], got {q!r}"
        )
    points, weights = np.polynomial.legendre.leggauss(int(q))
    return 0.5 * (points + 1.0), 0.5 * weights


def tensor_rule(
    q: int,
    box: tuple[float, float, float, float] = (0.0, 1.0, 0.0, 1.0),
) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss rule on [u0, u1] x [v0, v1]; returns (points (q*q, 2), weights)."""
    x, w = gauss_rule(q)
    u0, u1, v0, v1 = box
    pu = u0 + (u1 - u0) * x
    pv = v0 + (v1 - v0) * x
    uu, vv = np.meshgrid(pu, pv, indexing="ij")
    weights = np.outer(w * (u1 - u0), w * (v1 - v0))
    return np.column_stack([uu.ravel(), vv.ravel()]), weights.ravel()
