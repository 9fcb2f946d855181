# tests/test_relax.py

import math

import numpy as np
import pytest

from fourfold.core import relax as relax_module
from fourfold.core.diagnostics import (
    classify_state_2d,
    monotonicity_report,
    splitting_report,
    symmetry_residual,
    tail_fit,
    uniqueness_probe,
)
from fourfold.core.energy import energy_1d
from fourfold.core.field import closed_form_wall, initial_condition, level_crossing
from fourfold.core.relax import LYAPUNOV_SLACK, _gradient_flow, merge_reports, relax_1d, relax_2d, relax_film
from fourfold.errors import PreconditionError
from fourfold.schemas import (
    AngleField1D,
    AngleField2D,
    FilmProblem,
    Grid2D,
    InitRecipe,
    RelaxConfig,
    RelaxReport,
    StateKind,
    WallProblem,
)

TANH_START = InitRecipe(kind="tanh_wall", args=(3.0,))
FILM_RELAX = RelaxConfig(residual_tol=1e-6, energy_tol=1e-10, dt_max=5.0)
SMALL_FILM = FilmProblem(nu=1.0, lx=2.0, ly=4.0)


@pytest.fixture(scope="module")
def relaxed_nu0(wall_grid):
    problem = WallProblem.for_wall(90, 0.0, wall_grid)
    return relax_1d(initial_condition(TANH_START, wall_grid, math.pi / 2), problem)


def test_nu0_relaxes_to_the_closed_form(relaxed_nu0, closed_form):
    theta, report = relaxed_nu0
    assert report.converged
    assert report.lyapunov_violations == 0
    assert np.max(np.abs(theta.theta - closed_form.theta)) < 1e-3
    assert report.final_energy == pytest.approx(0.5, abs=1e-3)


def test_relaxed_wall_is_centred_and_converged(relaxed_nu5):
    problem, theta, report = relaxed_nu5
    assert report.converged
    assert report.final_residual <= 1e-8
    assert report.lyapunov_violations == 0
    assert level_crossing(theta, math.pi / 4) == pytest.approx(0.0, abs=1e-3)
    assert report.final_energy == pytest.approx(energy_1d(theta, problem).total, rel=1e-12)


def test_semi_implicit_energy_trace_is_nonincreasing(small_grid):
    problem = WallProblem.for_wall(180, 5.0, small_grid)
    start = initial_condition(InitRecipe(kind="two_wall", args=(8.0,)), small_grid, math.pi)
    _, report = relax_1d(start, problem, RelaxConfig(polish=False, trace_every=1))
    energies = np.array(report.energy_trace)
    assert np.all(np.diff(energies) <= LYAPUNOV_SLACK * abs(energies[0]))
    assert report.trace_steps[-1] == report.steps_taken


def test_relaxation_forgets_a_translation(small_grid):
    """Two starts five cells apart end on the same recentred profile."""
    problem = WallProblem.for_wall(90, 0.0, small_grid)
    shifted = AngleField1D(grid=small_grid, theta=np.arctan(np.exp(-(small_grid.x - 5 * small_grid.h))))
    first, _ = relax_1d(closed_form_wall(small_grid), problem)
    second, _ = relax_1d(shifted, problem)
    np.testing.assert_allclose(first.theta, second.theta, atol=1e-4)


def test_without_polish_the_report_describes_the_recentred_profile(small_grid):
    problem = WallProblem.for_wall(90, 1.0, small_grid)
    start = initial_condition(TANH_START, small_grid, math.pi / 2)
    theta, report = relax_1d(start, problem, RelaxConfig(polish=False))
    assert level_crossing(theta, math.pi / 4) == pytest.approx(0.0, abs=1e-4)
    assert report.final_energy == pytest.approx(energy_1d(theta, problem).total, rel=1e-12)


def test_explicit_steps_respect_the_stability_limit(small_grid):
    problem = WallProblem.for_wall(90, 1.0, small_grid)
    start = initial_condition(TANH_START, small_grid, math.pi / 2)
    config = RelaxConfig(stepping="explicit", dt=1.0, max_steps=50, trace_every=5, polish=False)
    _, report = relax_1d(start, problem, config)
    assert report.termination == "max_steps"
    assert report.steps_taken == 50
    assert max(report.dt_trace) <= 0.2 * small_grid.h ** 2
    assert report.rejected_steps == 0


def test_explicit_steps_back_off_after_an_energy_rise():
    """With dt = 1 the explicit step overshoots the bowl E = 2 x^2; halving dt recovers."""
    def bowl(values):
        return 2.0 * float(np.sum(values ** 2)), 4.0 * values

    config = RelaxConfig(stepping="explicit", dt=1.0, trace_every=1)
    _, report = _gradient_flow(np.linspace(-1.0, 1.0, 5), bowl, lambda residual, dt: -dt * residual, config,
                               explicit_dt=1.0, label="explicit bowl")
    assert report.converged
    assert report.rejected_steps >= 1
    assert report.lyapunov_violations == 0
    assert np.all(np.diff(report.energy_trace) <= 0.0)


def test_explicit_backtracking_gives_up_below_dt_min():
    def uphill(values):
        return 0.5 * float(np.sum(values ** 2)), -values

    config = RelaxConfig(stepping="explicit", dt=1.0, dt_min=1e-3)
    _, report = _gradient_flow(np.ones(4), uphill, lambda residual, dt: -dt * residual, config,
                               explicit_dt=1.0, label="explicit uphill")
    assert report.termination == "diverged"
    assert report.rejected_steps == 10


def test_a_step_that_flips_between_two_states_is_shortened():
    """dt = 1/2 maps x to -x on the bowl E = 2 x^2, so the energy and residual never change."""
    def bowl(values):
        return 2.0 * float(np.sum(values ** 2)), 4.0 * values

    config = RelaxConfig(stepping="explicit", dt=0.5, dt_max=0.5, max_steps=100)
    _, report = _gradient_flow(np.linspace(-1.0, 1.0, 5), bowl, lambda residual, dt: -dt * residual, config,
                               explicit_dt=1.0, label="flipping bowl")
    assert report.converged
    assert report.steps_taken < 10


def test_recentring_that_spoils_the_residual_is_not_reported_as_converged(small_grid, monkeypatch):
    problem = WallProblem.for_wall(90, 0.0, small_grid)

    def kicked(theta, problem):
        return theta.with_theta(theta.theta + 0.05 * np.exp(-theta.grid.x ** 2))

    monkeypatch.setattr(relax_module, "recentre_1d", kicked)
    _, report = relax_1d(closed_form_wall(small_grid), problem, RelaxConfig(polish=False))
    assert report.termination == "max_steps"
    assert report.final_residual > 1e-8


# --- 2D ---

def test_stationary_film_takes_no_steps():
    theta0 = AngleField2D(grid=Grid2D(nx=8, ny=16, h=0.25), theta=np.zeros((8, 16)))
    theta, report = relax_2d(theta0, SMALL_FILM.model_copy(update={"nu": 0.0}))
    assert report.termination == "converged"
    assert report.steps_taken == 0
    assert report.trace_steps == [0]
    np.testing.assert_array_equal(theta.theta, theta0.theta)


def test_step_budget_ends_the_run():
    theta0 = initial_condition(InitRecipe(kind="step"), Grid2D(nx=8, ny=16, h=0.25))
    _, report = relax_2d(theta0, SMALL_FILM, RelaxConfig(max_steps=3))
    assert report.termination == "max_steps"
    assert report.steps_taken == 3
    assert report.energy_trace[-1] < report.energy_trace[0]


def test_checkpoints_fire_on_schedule():
    calls = []
    theta0 = initial_condition(InitRecipe(kind="step"), Grid2D(nx=8, ny=16, h=0.25))
    config = RelaxConfig(max_steps=20, checkpoint_every=5)
    relax_2d(theta0, SMALL_FILM, config, checkpoint=lambda step, theta, energy: calls.append((step, theta.shape, energy)))
    assert [step for step, _, _ in calls] == [5, 10, 15, 20]
    assert all(shape == (8, 16) for _, shape, _ in calls)
    assert [energy for _, _, energy in calls] == sorted((energy for _, _, energy in calls), reverse=True)


def test_relax_2d_rejects_a_field_on_another_grid():
    theta0 = AngleField2D(grid=Grid2D(nx=8, ny=16, h=0.5), theta=np.zeros((8, 16)))
    with pytest.raises(PreconditionError):
        relax_2d(theta0, SMALL_FILM)


def test_multi_start_keeps_the_lowest_energy():
    problem = SMALL_FILM.model_copy(update={"init": InitRecipe(kind="step")})
    alternates = [InitRecipe(kind="monodomain", args=(math.pi / 2,)), InitRecipe(kind="monodomain", args=(0.0,))]
    theta, report, starts = relax_film(problem, RelaxConfig(max_steps=100), alternates=alternates)
    assert [s.init for s in starts] == [str(problem.init)] + [str(a) for a in alternates]
    assert [s.kept for s in starts].count(True) == 1
    kept = next(s for s in starts if s.kept)
    assert kept.final_energy == min(s.final_energy for s in starts)
    assert report.final_energy == kept.final_energy
    assert theta.grid == problem.grid


def test_backtracking_gives_up_below_dt_min():
    """A residual pointing uphill makes every step rise in energy."""
    def uphill(values):
        return 0.5 * float(np.sum(values ** 2)), -values

    def precondition(residual, dt):
        return -dt * residual

    config = RelaxConfig(dt=1.0, dt_min=1e-3)
    theta, report = _gradient_flow(np.ones(4), uphill, precondition, config, explicit_dt=1.0, label="uphill")
    assert report.termination == "diverged"
    assert report.steps_taken == 0
    assert report.rejected_steps == 10
    np.testing.assert_array_equal(theta, np.ones(4))


def test_quadratic_flow_converges():
    def bowl(values):
        return 0.5 * float(np.sum(values ** 2)), values

    def precondition(residual, dt):
        return -dt * residual / (1.0 + dt)

    _, report = _gradient_flow(np.linspace(-1.0, 1.0, 7), bowl, precondition, RelaxConfig(), explicit_dt=1.0, label="bowl")
    assert report.converged
    assert report.final_residual <= 1e-8


def test_merge_reports_offsets_the_second_trace():
    def report(steps, energies, termination):
        return RelaxReport(steps_taken=steps, final_residual=1e-3, final_energy=energies[-1], energy_trace=energies,
                           residual_trace=[1.0] * len(energies), trace_steps=list(range(0, steps + 1, steps)),
                           dt_trace=[0.1] * len(energies), termination=termination, wall_clock=1.0)

    merged = merge_reports(report(10, [3.0, 2.0], "converged"), report(4, [2.0, 1.5], "max_steps"))
    assert merged.steps_taken == 14
    assert merged.trace_steps == [0, 10, 10, 14]
    assert merged.termination == "max_steps"
    assert merged.final_energy == 1.5
    assert merged.wall_clock == 2.0


# --- Acceptance runs ---

@pytest.fixture(scope="module")
def relaxed_walls(wall_grid):
    walls = {}
    for wall in (90, 180):
        alpha = math.pi / 2 if wall == 90 else math.pi
        for nu in (1.0, 5.0, 50.0):
            problem = WallProblem.for_wall(wall, nu, wall_grid)
            walls[wall, nu] = relax_1d(initial_condition(TANH_START, wall_grid, alpha), problem)
    return walls


@pytest.mark.slow
@pytest.mark.parametrize("wall", [90, 180])
def test_relaxed_walls_are_monotone_and_symmetric(wall, relaxed_walls):
    alpha = math.pi / 2 if wall == 90 else math.pi
    for nu in (1.0, 5.0, 50.0):
        theta, report = relaxed_walls[wall, nu]
        assert report.converged and report.lyapunov_violations == 0
        monotone = monotonicity_report(theta, alpha)
        assert monotone.max_violation < 1e-9
        assert symmetry_residual(theta, alpha) < 1e-4
        assert theta.theta.min() >= -1e-9 and theta.theta.max() <= alpha + 1e-9
        if wall == 90:
            assert monotone.strict_in_core


@pytest.mark.slow
def test_wall_energy_grows_with_nu(relaxed_walls):
    for wall in (90, 180):
        energies = [relaxed_walls[wall, nu][1].final_energy for nu in (1.0, 5.0, 50.0)]
        assert energies == sorted(energies)


@pytest.mark.slow
def test_strong_stray_field_pulls_the_halves_together(relaxed_walls):
    separations = [splitting_report(relaxed_walls[180, nu][0]).separation for nu in (1.0, 5.0, 50.0)]
    assert separations[0] > separations[1] > separations[2]


@pytest.mark.slow
@pytest.mark.parametrize("wall", [90, 180])
@pytest.mark.parametrize("nu", [1.0, 5.0, 50.0])
def test_relaxed_tails_decay_like_inverse_square(wall, nu, relaxed_walls):
    fit = tail_fit(relaxed_walls[wall, nu][0])
    assert -2.3 <= fit.slope <= -1.7
    assert fit.r_squared > 0.99
    if nu == 50.0:
        assert fit.crossover_detected


@pytest.mark.slow
@pytest.mark.parametrize("nu", [1.0, 5.0, 50.0])
def test_ninety_degree_wall_is_unique(nu, wall_grid):
    problem = WallProblem.for_wall(90, nu, wall_grid)
    inits = [InitRecipe(kind="tanh_wall", args=(1.0,)), InitRecipe(kind="tanh_wall", args=(10.0,)), InitRecipe(kind="step")]
    report = uniqueness_probe(problem, inits)
    assert report.terminations == ["converged"] * 3
    assert report.max_pairwise_distance < 1e-4


@pytest.fixture(scope="module")
def small_films():
    problem = FilmProblem(nu=5.0, lx=8.0, ly=16.0)
    films = {}
    for name, recipe in (("C", "half_split_vertical(pi/2, -pi/2)"), ("S", "monodomain(pi/3)")):
        start = initial_condition(InitRecipe.model_validate(recipe), problem.grid)
        films[name] = relax_2d(start, problem, FILM_RELAX)
    return films


@pytest.mark.slow
@pytest.mark.parametrize("name, expected", [("C", StateKind.C), ("S", StateKind.S)])
def test_small_film_remanent_states(name, expected, small_films):
    theta, report = small_films[name]
    assert report.lyapunov_violations == 0
    label = classify_state_2d(theta)
    assert label.kind == expected
    assert label.degree == 0


@pytest.mark.slow
def test_c_state_is_below_s_state(small_films):
    assert small_films["C"][1].final_energy < small_films["S"][1].final_energy


@pytest.mark.slow
@pytest.mark.parametrize("nu, pattern", [(5.0, "corners"), (10.0, "bound_pair")])
def test_half_landau_lower_edge(nu, pattern):
    """Corner vortices at nu = 5; a bound pair in the middle of the open edge at nu = 10."""
    problem = FilmProblem(nu=nu, lx=32.0, ly=64.0, init=InitRecipe(kind="half_split", args=(math.pi, 0.0)))
    config = FILM_RELAX.model_copy(update={"max_steps": 50000})
    theta, report, starts = relax_film(problem, config, alternates=[InitRecipe(kind="bound_pair", args=(math.pi, 0.0))])
    assert all(s.termination != "diverged" for s in starts)
    assert report.lyapunov_violations == 0
    label = classify_state_2d(theta)
    assert label.kind == StateKind.HALF_LANDAU
    assert label.degree == 0
    assert label.vortex_pattern == pattern
    closure = "top" if label.open_edge == "bottom" else "bottom"
    turn = math.cos(math.radians(label.open_edge_angle_deg - label.edge_angles_deg[closure]))
    assert turn > 0.5 if pattern == "corners" else turn < -0.5
