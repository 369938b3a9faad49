"""
Isogeometric Reissner-Mindlin plate solver  -  command-line driver
══════════════════════════════════════════════════════════════════
Commands (selected by the "command" key of the JSON configuration):

  solve        one discrete solution on one mesh level, written as a field dump
  convergence  a per-level error table against the exact/reference solution (CSV)
  verify       the structural self-check suite, printed as pass/fail

Usage:
    python -m iga_plate.main --config run.json
    python -m iga_plate.main --config run.json --output results --threads 0 --verbose

Exit codes: 0 success, 1 invalid configuration or parameters, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from iga_plate.assembly import MaterialParams, PlateProblem
from iga_plate.config import RunConfig, load_config
from iga_plate.core import ParameterError, PlateError
from iga_plate.expressions import compile_load
from iga_plate.geometry import read_control_net, unit_square_map
from iga_plate.pipelines.study import (
    CaseSpec,
    MeshRecipe,
    ReferenceRecipe,
    StudyResult,
    build_level,
    run_convergence_study,
)
from iga_plate.services.case_router import CASE_LABELS, get_case
from iga_plate.solver import DiscreteSolution, recover_shear, solve_plate
from iga_plate.verification import run_verification

logger = logging.getLogger("iga_plate")

FLOAT_FORMAT = "%.11e"
FIELD_COLUMNS = ["x", "y", "w", "theta1", "theta2", "gamma1", "gamma2"]


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Isogeometric Reissner-Mindlin plate solver")
    parser.add_argument("--config", required=True, help="Path to the JSON run configuration")
    parser.add_argument("--output", default=None, help="Output directory (overrides output.directory)")
    parser.add_argument("--threads", type=int, default=1, help="Assembly threads, 0 = all cores")
    parser.add_argument("--seed", type=int, default=0, help="Seed for the randomized verify checks")
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    return parser.parse_args(argv)


# ─── Problem construction ────────────────────────────────────────────────────

def custom_case(config: RunConfig) -> CaseSpec:
    custom = config.custom
    load = compile_load(custom.load)
    source = "unit square"
    if custom.geometry:
        geometry_path = source = custom.geometry

        def geometry():
            return read_control_net(geometry_path)
    else:
        geometry = unit_square_map
    return CaseSpec(
        name="custom",
        display_name=f"Custom problem on {source}, f = {custom.load}",
        geometry=geometry,
        bc=custom.boundary.to_spec(),
        load_factory=lambda material: load,
        reference=ReferenceRecipe(level=custom.reference_level, p=3, alpha=2, mesh=MeshRecipe("uniform")),
    )


def resolve_case(config: RunConfig) -> CaseSpec:
    if config.custom is not None:
        return custom_case(config)
    return get_case(config.case, reference_level=config.reference_level)


# ─── Writers ─────────────────────────────────────────────────────────────────

def write_study_csv(result: StudyResult, path: str | Path) -> pd.DataFrame:
    frame = result.to_frame()
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep="")
    return frame


def sample_fields(sol: DiscreteSolution, samples: int) -> pd.DataFrame:
    """Fields on a uniform samples x samples parametric lattice, u index fastest."""
    lattice = np.linspace(0.0, 1.0, samples)
    grid = sol.evaluate_grid(lattice, lattice)
    gamma = recover_shear(sol).coefficient * (grid.theta - grid.grad_w)

    def flat(a: np.ndarray) -> np.ndarray:
        return np.swapaxes(a, 0, 1).reshape(-1)

    return pd.DataFrame({
        "x":      flat(grid.points[..., 0]),
        "y":      flat(grid.points[..., 1]),
        "w":      flat(grid.w),
        "theta1": flat(grid.theta[..., 0]),
        "theta2": flat(grid.theta[..., 1]),
        "gamma1": flat(gamma[..., 0]),
        "gamma2": flat(gamma[..., 1]),
    }, columns=FIELD_COLUMNS)


def write_field_dump(sol: DiscreteSolution, path: str | Path, samples: int = 21) -> pd.DataFrame:
    frame = sample_fields(sol, samples)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{samples} {samples}\n")
        frame.to_csv(fh, sep=" ", header=False, index=False, float_format=FLOAT_FORMAT)
    return frame


# ─── Commands ────────────────────────────────────────────────────────────────

def run_solve(config: RunConfig, output: Path, workers: int) -> int:
    case = resolve_case(config)
    material: MaterialParams = config.material.to_params()
    setup = build_level(case, config.p, config.alpha, config.level)
    problem = PlateProblem(material, config.t, setup.geometry, case.bc, case.load(material))
    print(f"🔄  Solving [{case.display_name}] level={config.level} p={config.p} alpha={config.alpha} t={config.t:g}")
    sol = solve_plate(problem, setup.spaces, q=config.q, tol=config.tol, workers=workers)
    path = output / config.output.field_name
    write_field_dump(sol, path, config.output.samples)
    w_center, *_ = sol((0.5, 0.5))
    print(f"   ✅ ndof={sol.ndof}  w(0.5, 0.5)={w_center:.6e}  ->  {path}")
    return 0


def run_convergence(config: RunConfig, output: Path, workers: int) -> int:
    case = resolve_case(config)
    label = CASE_LABELS.get(config.case, case.display_name) if config.case else case.display_name
    print(f"🔄  Convergence study [{label}] p={config.p} alpha={config.alpha} t={config.t:g} levels={config.levels}")
    result = run_convergence_study(
        case, config.p, config.alpha, config.t, config.levels,
        material=config.material.to_params(), q=config.q, tol=config.tol, workers=workers,
    )
    path = output / config.output.csv_name
    frame = write_study_csv(result, path)
    print(frame.to_string(index=False, float_format=lambda v: f"{v:.4e}"))
    print(f"   ✅ {len(frame)} levels  ->  {path}")
    return 0


def run_verify(config: RunConfig, seed: int) -> int:
    print(f"🔄  Verifying discretisation invariants (p={config.p}, alpha={config.alpha}, seed={seed})")
    results = run_verification(config.p, config.alpha, seed)
    for r in results:
        mark = "✅ PASS" if r.passed else "❌ FAIL"
        print(f"   {mark}  {r.name:<24} {r.value:.3e}  (<= {r.threshold:.0e})")
    return 0 if all(r.passed for r in results) else 2


def run(config: RunConfig, output: str | Path | None = None, threads: int = 1, seed: int = 0) -> int:
    out = Path(output or config.output.directory)
    workers = threads if threads > 0 else (os.cpu_count() or 1)
    if config.command == "solve":
        return run_solve(config, out, workers)
    if config.command == "convergence":
        return run_convergence(config, out, workers)
    return run_verify(config, seed)


def main(argv: list[str] | None = None) -> int:
    args = parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(args.config)
        return run(config, args.output, args.threads, args.seed)
    except ParameterError as exc:
        logger.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PlateError as exc:
        logger.error("%s", exc)
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
