"""Shared fixtures for the plate test suite."""

from __future__ import annotations

import numpy as np
import pytest

from iga_plate.assembly import MaterialParams, PlateProblem
from iga_plate.geometry import quarter_annulus_map, unit_square_map
from iga_plate.spaces import BoundaryKind, BoundarySpec, make_plate_spaces, uniform_mesh


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def material() -> MaterialParams:
    return MaterialParams()


@pytest.fixture
def square_spaces():
    return make_plate_spaces(3, 2, uniform_mesh(4))


@pytest.fixture
def annulus_problem(material) -> PlateProblem:
    return PlateProblem(
        material, 1e-2, quarter_annulus_map(), BoundarySpec.uniform(BoundaryKind.HARD),
        lambda x, y: 1e4 * np.sin(2.0 * np.arctan2(y, x)),
    )


@pytest.fixture
def clamped_square_problem(material) -> PlateProblem:
    return PlateProblem(
        material, 1e-2, unit_square_map(), BoundarySpec.uniform(BoundaryKind.CLAMPED),
        lambda x, y: np.ones_like(x),
    )
