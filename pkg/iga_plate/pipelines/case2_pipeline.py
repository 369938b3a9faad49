"""
Hard simply supported quarter annulus.

Geometry  : quarter annulus, radii 1 and 2.5 (exact NURBS)
Boundary  : all four sides simply_supported_hard
Load      : f = 1e4 sin(2 atan2(y, x))
Reference : fine uniform mesh, p = 3, alpha = 2
"""

from __future__ import annotations

import numpy as np

from iga_plate.assembly import LoadFunction, MaterialParams
from iga_plate.geometry import GeometryMap, quarter_annulus_map
from iga_plate.pipelines.study import CaseSpec, MeshRecipe, ReferenceRecipe
from iga_plate.spaces import BoundaryKind, BoundarySpec

# ─── Case config ──────────────────────────────────────────────────────────────
DISPLAY_NAME    = "Hard simply supported quarter annulus"
INNER_RADIUS    = 1.0
OUTER_RADIUS    = 2.5
LOAD_AMPLITUDE  = 1e4
REFERENCE_LEVEL = 128
DEFAULT_LEVELS  = [4, 8, 16, 32]
DEFAULT_T       = 1e-2


def annulus_load(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return LOAD_AMPLITUDE * np.sin(2.0 * np.arctan2(y, x))


def load_factory(material: MaterialParams) -> LoadFunction:
    return annulus_load


def annulus() -> GeometryMap:
    return quarter_annulus_map(INNER_RADIUS, OUTER_RADIUS)


def case2(reference_level: int = REFERENCE_LEVEL) -> CaseSpec:
    return CaseSpec(
        name="case2",
        display_name=DISPLAY_NAME,
        geometry=annulus,
        bc=BoundarySpec.uniform(BoundaryKind.HARD),
        load_factory=load_factory,
        reference=ReferenceRecipe(level=reference_level, p=3, alpha=2, mesh=MeshRecipe("uniform")),
        mesh=MeshRecipe("uniform"),
    )
