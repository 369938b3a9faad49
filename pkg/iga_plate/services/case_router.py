"""
Case Router
───────────
Maps the case names accepted on the command line to benchmark pipelines.
Add a new case by:
  1. Creating iga_plate/pipelines/<name>_pipeline.py exposing DISPLAY_NAME,
     DEFAULT_LEVELS, DEFAULT_T and a constructor returning a CaseSpec.
  2. Registering it in CASE_PIPELINES and CASE_VARIANTS below.
"""

from __future__ import annotations

from types import ModuleType

from iga_plate.pipelines import case1_pipeline, case2_pipeline, case3_pipeline
from iga_plate.pipelines.study import CaseSpec

# ─── Registry ────────────────────────────────────────────────────────────────

CASE_PIPELINES: dict[str, ModuleType] = {
    "case1": case1_pipeline,
    "case2": case2_pipeline,
    "case3": case3_pipeline,
}

# public name -> (pipeline, constructor, keyword arguments)
CASE_VARIANTS: dict[str, tuple[str, str, dict]] = {
    "case1":         ("case1", "case1", {}),
    "case2":         ("case2", "case2", {}),
    "case3-uniform": ("case3", "case3", {"mesh_kind": "uniform"}),
    "case3-adapted": ("case3", "case3", {"mesh_kind": "layer_adapted"}),
}

CASE_LABELS: dict[str, str] = {
    name: CASE_PIPELINES[pipeline].DISPLAY_NAME for name, (pipeline, _, _) in CASE_VARIANTS.items()
}

VALID_CASES = list(CASE_VARIANTS.keys())


# ─── Public accessors ────────────────────────────────────────────────────────

def _pipeline(name: str) -> ModuleType:
    if name not in CASE_VARIANTS:
        raise KeyError(f"Unknown case '{name}'. Valid choices: {VALID_CASES}")
    return CASE_PIPELINES[CASE_VARIANTS[name][0]]


def get_case(name: str, reference_level: int | None = None) -> CaseSpec:
    module = _pipeline(name)
    _, constructor, kwargs = CASE_VARIANTS[name]
    kwargs = dict(kwargs)
    if reference_level is not None and hasattr(module, "REFERENCE_LEVEL"):
        kwargs["reference_level"] = reference_level
    return getattr(module, constructor)(**kwargs)


def get_default_levels(name: str) -> list[int]:
    return list(_pipeline(name).DEFAULT_LEVELS)


def get_default_thickness(name: str) -> float:
    return float(_pipeline(name).DEFAULT_T)
