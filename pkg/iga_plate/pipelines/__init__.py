from iga_plate.pipelines.case1_pipeline import case1
from iga_plate.pipelines.case2_pipeline import case2
from iga_plate.pipelines.case3_pipeline import case3
from iga_plate.pipelines.study import (
    CaseSpec,
    MeshRecipe,
    ReferenceRecipe,
    StudyResult,
    build_level,
    matched_dof_comparison,
    run_convergence_study,
    strong_form_residual,
    thickness_sweep,
)

__all__ = [
    "CaseSpec",
    "MeshRecipe",
    "ReferenceRecipe",
    "StudyResult",
    "build_level",
    "case1",
    "case2",
    "case3",
    "matched_dof_comparison",
    "run_convergence_study",
    "strong_form_residual",
    "thickness_sweep",
]
