"""
Clamped unit square with a closed-form solution.

Geometry : (0,1)^2, identity map
Boundary : all four sides clamped
Load     : f = D [12 Y (5X+1)(2Y^2 + X(5Y+1)) + 12 X (5Y+1)(2X^2 + Y(5X+1))]
           with X = x(x-1), Y = y(y-1), D = E / (12 (1 - nu^2))
Exact    : theta = (Y^3 X^2 X', X^3 Y^2 Y')
           w     = X^3 Y^3 / 3 - c t^2 [Y^3 X (5X+1) + X^3 Y (5Y+1)],  c = 2 / (5 (1 - nu))
"""

from __future__ import annotations

import numpy as np

from iga_plate.assembly import LoadFunction, MaterialParams
from iga_plate.geometry import unit_square_map
from iga_plate.norms import ExactSolution
from iga_plate.pipelines.study import CaseSpec, MeshRecipe
from iga_plate.spaces import BoundaryKind, BoundarySpec

# ─── Case config ──────────────────────────────────────────────────────────────
DISPLAY_NAME   = "Clamped square (closed-form solution)"
DEFAULT_LEVELS = [4, 8, 16, 32]
DEFAULT_T      = 1e-3


def _factors(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, ...]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return x * (x - 1.0), y * (y - 1.0), 2.0 * x - 1.0, 2.0 * y - 1.0


def load_factory(material: MaterialParams) -> LoadFunction:
    d = material.d_bend

    def load(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        X, Y, _, _ = _factors(x, y)
        return d * (
            12.0 * Y * (5.0 * X + 1.0) * (2.0 * Y ** 2 + X * (5.0 * Y + 1.0))
            + 12.0 * X * (5.0 * Y + 1.0) * (2.0 * X ** 2 + Y * (5.0 * X + 1.0))
        )

    return load


def exact_factory(t: float, material: MaterialParams) -> ExactSolution:
    c = 2.0 / (5.0 * (1.0 - material.nu))
    shear_scale = material.mu * material.k_shear * c

    def w(x, y):
        X, Y, _, _ = _factors(x, y)
        return X ** 3 * Y ** 3 / 3.0 - c * t ** 2 * (Y ** 3 * X * (5.0 * X + 1.0) + X ** 3 * Y * (5.0 * Y + 1.0))

    def kirchhoff_gap(X, Y, Xp, Yp):
        # theta - grad w, divided by c t^2
        g1 = Y ** 3 * Xp * (10.0 * X + 1.0) + 3.0 * X ** 2 * Xp * Y * (5.0 * Y + 1.0)
        g2 = X ** 3 * Yp * (10.0 * Y + 1.0) + 3.0 * Y ** 2 * Yp * X * (5.0 * X + 1.0)
        return np.stack([g1, g2], axis=-1)

    def theta(x, y):
        X, Y, Xp, Yp = _factors(x, y)
        return np.stack([Y ** 3 * X ** 2 * Xp, X ** 3 * Y ** 2 * Yp], axis=-1)

    def grad_w(x, y):
        X, Y, Xp, Yp = _factors(x, y)
        return theta(x, y) - c * t ** 2 * kirchhoff_gap(X, Y, Xp, Yp)

    def grad_theta(x, y):
        X, Y, Xp, Yp = _factors(x, y)
        t11 = 2.0 * Y ** 3 * X * (5.0 * X + 1.0)
        t12 = 3.0 * Y ** 2 * Yp * X ** 2 * Xp
        t22 = 2.0 * X ** 3 * Y * (5.0 * Y + 1.0)
        return np.stack([np.stack([t11, t12], axis=-1), np.stack([t12, t22], axis=-1)], axis=-2)

    def shear(x, y):
        return shear_scale * kirchhoff_gap(*_factors(x, y))

    return ExactSolution(w=w, grad_w=grad_w, theta=theta, grad_theta=grad_theta, shear=shear)


def case1() -> CaseSpec:
    return CaseSpec(
        name="case1",
        display_name=DISPLAY_NAME,
        geometry=unit_square_map,
        bc=BoundarySpec.uniform(BoundaryKind.CLAMPED),
        load_factory=load_factory,
        exact_factory=exact_factory,
        mesh=MeshRecipe("uniform"),
    )
