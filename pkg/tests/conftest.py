# tests/conftest.py

import math

import numpy as np
import pytest

from fourfold.core.field import closed_form_wall, initial_condition
from fourfold.core.relax import relax_1d
from fourfold.schemas import Grid1D, InitRecipe, WallProblem


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def wall_grid():
    """The reduced-resolution window used throughout: W = 200, n = 2048."""
    return Grid1D.symmetric(2048, 200.0)


@pytest.fixture(scope="session")
def small_grid():
    return Grid1D.symmetric(512, 100.0)


@pytest.fixture
def problem_90(wall_grid):
    return WallProblem.for_wall(90, 5.0, wall_grid)


@pytest.fixture
def problem_180(wall_grid):
    return WallProblem.for_wall(180, 5.0, wall_grid)


@pytest.fixture(scope="session")
def closed_form(wall_grid):
    return closed_form_wall(wall_grid)


@pytest.fixture(scope="module")
def relaxed_nu5(wall_grid):
    """A relaxed 90 degree wall at nu = 5 with its report."""
    problem = WallProblem.for_wall(90, 5.0, wall_grid)
    start = initial_condition(InitRecipe(kind="tanh_wall", args=(3.0,)), wall_grid, math.pi / 2)
    theta, report = relax_1d(start, problem)
    return problem, theta, report
