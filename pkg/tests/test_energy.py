# tests/test_energy.py

import math

import numpy as np
import pytest

from fourfold.core.energy import (
    PINNED_CELLS,
    _magnetostatic_breakdown,
    check_coercivity,
    check_fold_inequality,
    check_rearrangement_inequality,
    effective_field_2d,
    el_residual_1d,
    energy_1d,
    energy_2d,
    energy_and_residual_1d,
    neumann_laplacian,
)
from fourfold.core.field import closed_form_wall, random_admissible_profile
from fourfold.core.nonlocal_ops import SpectralPlan1D, StrayFieldPlan2D
from fourfold.errors import PreconditionError
from fourfold.schemas import AngleField1D, AngleField2D, Grid1D, Grid2D, WallProblem

FD_STEP = 1e-5


def _bump(grid: Grid1D, centre: float = 0.0, width: float = 3.0) -> np.ndarray:
    return np.exp(-((grid.x - centre) / width) ** 2)


def test_closed_form_energy_splits_evenly(closed_form, wall_grid):
    """At nu = 0 the closed-form wall has energy 1/2, half exchange and half anisotropy."""
    energy = energy_1d(closed_form, WallProblem.for_wall(90, 0.0, wall_grid))
    assert energy.total == pytest.approx(0.5, abs=1e-3)
    assert energy.exchange == pytest.approx(0.25, abs=1e-3)
    assert energy.anisotropy == pytest.approx(0.25, abs=1e-3)
    assert energy.magnetostatic == 0.0


def test_non_admissible_profile_is_rejected(problem_90, wall_grid):
    theta = AngleField1D(grid=wall_grid, theta=np.zeros(wall_grid.n_points))
    with pytest.raises(PreconditionError):
        energy_1d(theta, problem_90)
    with pytest.raises(PreconditionError):
        el_residual_1d(theta, problem_90)
    assert energy_1d(theta, problem_90, check=False).total == 0.0


def test_profile_on_another_grid_is_rejected(problem_90, small_grid):
    with pytest.raises(PreconditionError):
        energy_1d(closed_form_wall(small_grid), problem_90)


def test_seminorm_methods_agree_on_a_wall(problem_90, closed_form):
    spectral = energy_1d(closed_form, problem_90, method="spectral")
    quadrature = energy_1d(closed_form, problem_90, method="quadrature")
    assert spectral.magnetostatic > 0
    assert quadrature.magnetostatic == pytest.approx(spectral.magnetostatic, rel=0.02)
    assert quadrature.exchange == spectral.exchange


def test_one_pass_evaluation_matches_energy(problem_180, rng, wall_grid):
    theta = random_admissible_profile(rng, wall_grid, math.pi)
    breakdown, residual = energy_and_residual_1d(theta.theta, problem_180, SpectralPlan1D(wall_grid))
    assert breakdown.total == pytest.approx(energy_1d(theta, problem_180).total, rel=1e-13)
    np.testing.assert_array_equal(residual, el_residual_1d(theta, problem_180))


@pytest.mark.parametrize("wall", [90, 180])
def test_residual_is_the_energy_gradient(wall, rng, wall_grid):
    """dE/de along a compactly supported direction v equals h sum(r v)."""
    problem = WallProblem.for_wall(wall, 5.0, wall_grid)
    theta = random_admissible_profile(rng, wall_grid, problem.alpha_limit)
    v = _bump(wall_grid, centre=rng.uniform(-5.0, 5.0))
    residual = el_residual_1d(theta, problem)
    plus = energy_1d(theta.with_theta(theta.theta + FD_STEP * v), problem).total
    minus = energy_1d(theta.with_theta(theta.theta - FD_STEP * v), problem).total
    predicted = wall_grid.h * float(np.dot(residual, v))
    assert (plus - minus) / (2 * FD_STEP) == pytest.approx(predicted, rel=1e-5)


def test_residual_vanishes_on_pinned_cells(problem_90, rng, wall_grid):
    residual = el_residual_1d(random_admissible_profile(rng, wall_grid), problem_90)
    assert np.all(residual[:PINNED_CELLS] == 0.0) and np.all(residual[-PINNED_CELLS:] == 0.0)


def test_closed_form_residual_is_second_order():
    """Halving h divides the discrete residual of the exact wall by four."""
    residuals = []
    for n in (1024, 2048):
        grid = Grid1D.symmetric(n, 100.0)
        residuals.append(np.max(np.abs(el_residual_1d(closed_form_wall(grid), WallProblem.for_wall(90, 0.0, grid)))))
    assert 3.5 < residuals[0] / residuals[1] < 4.5


# --- Lemma checks ---

@pytest.mark.parametrize("wall", [90, 180])
def test_inequalities_hold_on_random_profiles(wall, rng, small_grid):
    problem = WallProblem.for_wall(wall, 5.0, small_grid)
    for _ in range(5):
        theta = random_admissible_profile(rng, small_grid, problem.alpha_limit, amplitude=2.0)
        assert check_fold_inequality(theta, problem).holds
        assert check_rearrangement_inequality(theta, problem).holds
        if wall == 90:
            report = check_coercivity(theta, problem)
            assert report.holds and report.gap >= -report.tolerance


@pytest.mark.slow
@pytest.mark.parametrize("wall", [90, 180])
def test_inequalities_hold_on_a_hundred_profiles(wall, rng, small_grid):
    for _ in range(100):
        problem = WallProblem.for_wall(wall, rng.uniform(0.5, 50.0), small_grid)
        theta = random_admissible_profile(rng, small_grid, problem.alpha_limit, amplitude=rng.uniform(0.1, 2.0))
        assert check_fold_inequality(theta, problem).holds
        assert check_rearrangement_inequality(theta, problem).holds
        if wall == 90:
            assert check_coercivity(theta, problem).holds


def test_coercivity_is_stated_for_ninety_degrees(problem_180, closed_form):
    with pytest.raises(PreconditionError):
        check_coercivity(closed_form, problem_180)


def test_fold_lowers_the_energy_of_a_winding_profile(small_grid):
    problem = WallProblem.for_wall(90, 5.0, small_grid)
    x = small_grid.x
    base = 0.25 * math.pi * (1 - np.tanh(x / 3.0))
    theta = AngleField1D(grid=small_grid, theta=base + 2 * math.pi * np.exp(-(x / 4.0) ** 2))
    report = check_fold_inequality(theta, problem)
    assert report.holds
    assert report.lhs < report.rhs
    assert report.components["anisotropy_after"] == pytest.approx(report.components["anisotropy_before"], rel=1e-12)


# --- 2D ---

@pytest.fixture
def film_grid():
    return Grid2D(nx=16, ny=24, h=0.5)


def test_uniform_film_energies(film_grid):
    plan = StrayFieldPlan2D(film_grid)
    aligned = energy_2d(AngleField2D(grid=film_grid, theta=np.zeros(film_grid.shape)), 0.0, plan)
    assert aligned.total == 0.0
    tilted = energy_2d(AngleField2D(grid=film_grid, theta=np.full(film_grid.shape, math.pi / 8)), 0.0, plan)
    assert tilted.exchange == 0.0
    assert tilted.anisotropy == pytest.approx(0.0625 * film_grid.lx * film_grid.ly)
    assert energy_2d(AngleField2D(grid=film_grid, theta=np.zeros(film_grid.shape)), 5.0, plan).magnetostatic > 0


def test_neumann_laplacian_conserves_the_mean(rng):
    theta = rng.normal(size=(9, 13))
    assert abs(float(np.sum(neumann_laplacian(theta, 0.3)))) < 1e-10
    np.testing.assert_allclose(neumann_laplacian(np.full((5, 7), 2.0), 0.3), 0.0)


def test_effective_field_is_minus_the_energy_gradient(rng, film_grid):
    """dE/de along v equals -h^2 sum(field v)."""
    plan = StrayFieldPlan2D(film_grid)
    theta = AngleField2D(grid=film_grid, theta=rng.uniform(-1.0, 1.0, film_grid.shape))
    v = rng.normal(size=film_grid.shape)
    field = effective_field_2d(theta, 5.0, plan)
    plus = energy_2d(theta.with_theta(theta.theta + FD_STEP * v), 5.0, plan).total
    minus = energy_2d(theta.with_theta(theta.theta - FD_STEP * v), 5.0, plan).total
    predicted = -film_grid.h ** 2 * float(np.sum(field * v))
    assert (plus - minus) / (2 * FD_STEP) == pytest.approx(predicted, rel=1e-5)


def test_film_plan_must_match_the_grid(film_grid):
    plan = StrayFieldPlan2D(Grid2D(nx=8, ny=8, h=0.5))
    with pytest.raises(PreconditionError):
        energy_2d(AngleField2D(grid=film_grid, theta=np.zeros(film_grid.shape)), 1.0, plan)


def test_tall_strip_reduces_to_the_wall_energy():
    """Growing a strip with a vertical 180 degree wall adds energy_1d per unit of added height."""
    nu, h, lx = 1.0, 0.25, 32.0
    line = Grid1D.symmetric(round(lx / h), lx)
    profile = 0.5 * math.pi * (1 - np.tanh(line.x / 2.0))
    expected = energy_1d(AngleField1D(grid=line, theta=profile), WallProblem.for_wall(180, nu, line), check=False).total

    totals = []
    for ly in (32.0, 64.0):
        grid = Grid2D(nx=line.n_points, ny=round(ly / h), h=h)
        theta = np.repeat(profile[:, None], grid.ny, axis=1)
        totals.append(energy_2d(AngleField2D(grid=grid, theta=theta), nu).total)
    assert (totals[1] - totals[0]) / 32.0 == pytest.approx(expected, rel=0.02)


def test_rounding_sized_negative_stray_energy_is_zero(caplog):
    with caplog.at_level("WARNING", logger="fourfold.core.energy"):
        breakdown = _magnetostatic_breakdown(1.0, 0.25, -1e-14)
    assert breakdown.magnetostatic == 0.0
    assert breakdown.total == pytest.approx(1.25)
    assert not caplog.records


def test_large_negative_stray_energy_is_reported(caplog):
    with caplog.at_level("WARNING", logger="fourfold.core.energy"):
        breakdown = _magnetostatic_breakdown(1.0, 0.25, -1e-3)
    assert breakdown.magnetostatic == 0.0
    assert "negative magnetostatic energy" in caplog.text
