"""
Quarter annulus with a boundary layer.

Geometry  : quarter annulus of case 2, same load
Boundary  : v=0 (inner arc, r=1)    -> simply_supported_soft
            v=1 (outer arc, r=2.5)  -> free
            u=0, u=1 (straight)     -> simply_supported_hard
Meshes    : uniform, or layer_adapted with bands of 3% of the annulus width
            (0.045 physical) at both arcs
Reference : layer-adapted fine mesh, p = 3, alpha = 2
"""

from __future__ import annotations

from iga_plate.pipelines.case2_pipeline import annulus, load_factory
from iga_plate.pipelines.study import LAYER_FRACTION, CaseSpec, MeshRecipe, ReferenceRecipe
from iga_plate.spaces import BoundaryKind, BoundarySpec

# ─── Case config ──────────────────────────────────────────────────────────────
DISPLAY_NAME    = "Quarter annulus with boundary layers"
REFERENCE_LEVEL = 64
DEFAULT_LEVELS  = [2, 4, 8, 16]
DEFAULT_T       = 1e-2
MESH_KINDS      = ("uniform", "layer_adapted")

BOUNDARY = BoundarySpec(
    u0=BoundaryKind.HARD,
    u1=BoundaryKind.HARD,
    v0=BoundaryKind.SOFT,
    v1=BoundaryKind.FREE,
)


def case3(mesh_kind: str = "uniform", reference_level: int = REFERENCE_LEVEL) -> CaseSpec:
    suffix = "uniform" if mesh_kind == "uniform" else "adapted"
    return CaseSpec(
        name=f"case3-{suffix}",
        display_name=f"{DISPLAY_NAME} ({mesh_kind.replace('_', '-')} meshes)",
        geometry=annulus,
        bc=BOUNDARY,
        load_factory=load_factory,
        reference=ReferenceRecipe(
            level=reference_level, p=3, alpha=2, mesh=MeshRecipe("layer_adapted", LAYER_FRACTION),
        ),
        mesh=MeshRecipe(mesh_kind, LAYER_FRACTION),
    )
