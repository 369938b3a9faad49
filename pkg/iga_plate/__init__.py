"""Isogeometric Reissner-Mindlin plate bending: compatible spline spaces, assembly, solve, convergence studies."""

from iga_plate.assembly import MaterialParams, PlateProblem, assemble_system
from iga_plate.core import PlateError
from iga_plate.geometry import GeometryMap, quarter_annulus_map, unit_square_map
from iga_plate.norms import ErrorReport, error_norms
from iga_plate.solver import DiscreteSolution, solve, solve_plate
from iga_plate.spaces import BoundaryKind, BoundarySpec, make_plate_spaces, uniform_mesh
from iga_plate.splines import KnotVector, eval_basis, make_knot_vector

__version__ = "1.0.0"

__all__ = [
    "BoundaryKind",
    "BoundarySpec",
    "DiscreteSolution",
    "ErrorReport",
    "GeometryMap",
    "KnotVector",
    "MaterialParams",
    "PlateError",
    "PlateProblem",
    "assemble_system",
    "error_norms",
    "eval_basis",
    "make_knot_vector",
    "make_plate_spaces",
    "quarter_annulus_map",
    "solve",
    "solve_plate",
    "uniform_mesh",
    "unit_square_map",
]
