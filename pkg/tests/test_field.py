# tests/test_field.py

import math

import numpy as np
import pytest
from pydantic import ValidationError

from fourfold.core.field import (
    fold_to_octant,
    fold_to_quadrant,
    fold_values,
    initial_condition,
    level_crossing,
    magnetization_of,
    pendulum_slots,
    random_admissible_profile,
    rearranged_competitor,
    symmetric_decreasing_rearrangement,
)
from fourfold.errors import DomainError
from fourfold.schemas import AngleField1D, Grid1D, Grid2D, InitRecipe, WallProblem


def test_magnetization_is_unit_and_oriented():
    """theta = 0 points along e2 and theta = pi/2 along -e1."""
    theta = np.linspace(-3.0, 3.0, 13)
    m1, m2 = magnetization_of(theta)
    np.testing.assert_allclose(m1 ** 2 + m2 ** 2, 1.0)
    assert magnetization_of(np.array([0.0]))[1][0] == pytest.approx(1.0)
    assert magnetization_of(np.array([math.pi / 2]))[0][0] == pytest.approx(-1.0)


@pytest.mark.parametrize("value, alpha, expected", [
    (3 * math.pi / 4, math.pi / 2, math.pi / 4),
    (-math.pi / 3, math.pi / 2, math.pi / 3),
    (math.pi + 0.2, math.pi / 2, 0.2),
    (3 * math.pi / 2, math.pi, math.pi / 2),
    (-0.4, math.pi, 0.4),
])
def test_fold_values_examples(value, alpha, expected):
    """Reflection into [0, alpha] with period 2 alpha."""
    assert fold_values(np.array([value]), alpha)[0] == pytest.approx(expected)


def test_fold_is_idempotent_and_preserves_anisotropy(rng):
    """Folding twice changes nothing; sin^2(2 theta) and, for 180 degrees, |sin theta| survive."""
    values = rng.uniform(-10.0, 10.0, 500)
    for alpha in (math.pi / 2, math.pi):
        once = fold_values(values, alpha)
        np.testing.assert_allclose(fold_values(once, alpha), once, atol=1e-14)
        assert once.min() >= 0 and once.max() <= alpha + 1e-14
        np.testing.assert_allclose(np.sin(2 * once) ** 2, np.sin(2 * values) ** 2, atol=1e-12)
    np.testing.assert_allclose(np.sin(fold_values(values, math.pi)), np.abs(np.sin(values)), atol=1e-12)


def test_fold_is_one_lipschitz(rng):
    values = np.cumsum(rng.normal(scale=0.3, size=400))
    folded = fold_values(values)
    assert np.all(np.abs(np.diff(folded)) <= np.abs(np.diff(values)) + 1e-14)


def test_fold_to_octant_range(small_grid):
    """rho stays in [0, alpha/2] and is symmetric under theta -> alpha - theta."""
    theta = AngleField1D(grid=small_grid, theta=np.linspace(0, math.pi / 2, small_grid.n_points))
    rho = fold_to_octant(theta).theta
    assert rho.min() >= 0 and rho.max() <= math.pi / 4
    np.testing.assert_allclose(rho, rho[::-1], atol=1e-12)


def test_fold_to_octant_rejects_out_of_range(small_grid):
    theta = AngleField1D(grid=small_grid, theta=np.full(small_grid.n_points, 2.0))
    with pytest.raises(DomainError):
        fold_to_octant(theta)


def test_pendulum_slots_order():
    assert pendulum_slots(5).tolist() == [2, 1, 3, 0, 4]
    assert pendulum_slots(4).tolist() == [2, 1, 3, 0]
    assert sorted(pendulum_slots(8).tolist()) == list(range(8))


def test_rearrangement_is_symmetric_decreasing(rng, small_grid):
    """Same multiset of values, maximum at n/2, nonincreasing away from it."""
    values = rng.uniform(0, 1, small_grid.n_points)
    star = symmetric_decreasing_rearrangement(AngleField1D(grid=small_grid, theta=values)).theta
    centre = small_grid.n_points // 2
    np.testing.assert_array_equal(np.sort(star), np.sort(values))
    assert star[centre] == values.max()
    assert np.all(np.diff(star[centre:]) <= 0)
    assert np.all(np.diff(star[:centre + 1]) >= 0)


def test_rearrangement_rejects_negative_values(small_grid):
    theta = AngleField1D(grid=small_grid, theta=np.linspace(-1, 1, small_grid.n_points))
    with pytest.raises(DomainError):
        symmetric_decreasing_rearrangement(theta)


def test_rearranged_competitor_is_monotone(rng, small_grid):
    for alpha in (math.pi / 2, math.pi):
        theta = random_admissible_profile(rng, small_grid, alpha)
        competitor = rearranged_competitor(theta, alpha).theta
        assert np.all(np.diff(competitor) <= 1e-14)
        assert competitor.max() <= alpha + 1e-14 and competitor.min() >= -1e-14


def test_level_crossing_of_shifted_wall(small_grid):
    x = small_grid.x
    theta = AngleField1D(grid=small_grid, theta=0.25 * math.pi * (1 - np.tanh((x - 3.0) / 2.0)))
    assert level_crossing(theta, math.pi / 4) == pytest.approx(3.0, abs=1e-4)


def test_level_crossing_missing_level(small_grid):
    theta = AngleField1D(grid=small_grid, theta=np.zeros(small_grid.n_points))
    with pytest.raises(DomainError):
        level_crossing(theta, 1.0)


def test_one_dimensional_recipes_are_admissible(small_grid):
    """Wall recipes connect alpha to 0 and cross alpha/2 at the origin."""
    problem = WallProblem.for_wall(180, 1.0, small_grid)
    for text in ("tanh_wall(3)", "two_wall(8)"):
        theta = initial_condition(InitRecipe.model_validate(text), small_grid, math.pi)
        assert theta.is_admissible(math.pi, problem.boundary_tolerance)
        assert level_crossing(theta, math.pi / 2) == pytest.approx(0.0, abs=1e-8)


def test_two_dimensional_step_equals_half_split():
    grid = Grid2D(nx=8, ny=12, h=0.5)
    step = initial_condition(InitRecipe(kind="step"), grid)
    split = initial_condition(InitRecipe.model_validate("half_split(pi, 0)"), grid)
    np.testing.assert_array_equal(step.theta, split.theta)
    assert step.theta[0, 0] == pytest.approx(math.pi) and step.theta[-1, -1] == 0.0


def test_vertical_split_has_no_one_dimensional_form(small_grid):
    with pytest.raises(ValueError):
        initial_condition(InitRecipe.model_validate("half_split_vertical(pi/2, -pi/2)"), small_grid)


def test_bound_pair_turns_the_bottom_edge_against_the_top():
    grid = Grid2D(nx=16, ny=32, h=0.5)
    theta = initial_condition(InitRecipe.model_validate("bound_pair(pi, 0)"), grid).theta
    split = initial_condition(InitRecipe.model_validate("half_split(pi, 0)"), grid).theta
    assert theta[0, 0] == pytest.approx(1.5 * math.pi, abs=0.25)
    assert theta[-1, 0] == pytest.approx(-0.5 * math.pi, abs=0.25)
    np.testing.assert_array_equal(theta[:, -1], split[:, -1])


def test_bound_pair_has_no_one_dimensional_form(small_grid):
    with pytest.raises(ValueError):
        initial_condition(InitRecipe.model_validate("bound_pair(pi, 0)"), small_grid)


def test_random_profiles_are_admissible(rng, wall_grid):
    for alpha in (math.pi / 2, math.pi):
        theta = random_admissible_profile(rng, wall_grid, alpha)
        assert theta.is_admissible(alpha, 1e-6)


@pytest.mark.parametrize("text, kind, args", [
    ("half_split(pi, 0)", "half_split", (math.pi, 0.0)),
    ("monodomain(pi/3)", "monodomain", (math.pi / 3,)),
    ("half_split_vertical(pi/2, -pi/2)", "half_split_vertical", (math.pi / 2, -math.pi / 2)),
    ("monodomain(3pi/4)", "monodomain", (3 * math.pi / 4,)),
    ("two_wall(8)", "two_wall", (8.0,)),
    ("bound_pair(pi, 0)", "bound_pair", (math.pi, 0.0)),
    ("step", "step", ()),
])
def test_recipe_parsing(text, kind, args):
    recipe = InitRecipe.model_validate(text)
    assert recipe.kind == kind
    assert recipe.args == pytest.approx(args)


@pytest.mark.parametrize("text", ["spiral(1)", "half_split(pi)", "tanh_wall(-1)", "monodomain(pie)"])
def test_bad_recipes_are_rejected(text):
    with pytest.raises(ValidationError):
        InitRecipe.model_validate(text)


def test_grid_must_be_power_of_two():
    with pytest.raises(ValidationError):
        Grid1D(n_points=1000, h=0.1, x0=0.0)


def test_fold_to_quadrant_removes_winding(small_grid):
    """A profile that winds by 2 pi folds back into [0, pi/2]."""
    x = small_grid.x
    base = 0.25 * math.pi * (1 - np.tanh(x / 3.0))
    theta = AngleField1D(grid=small_grid, theta=base + 2 * math.pi * np.exp(-(x / 4.0) ** 2))
    folded = fold_to_quadrant(theta).theta
    assert folded.min() >= 0 and folded.max() <= math.pi / 2 + 1e-14
    np.testing.assert_allclose(folded[[0, -1]], [math.pi / 2, 0.0], atol=1e-9)
