"""
The reduced-resolution property suite behind `fourfold validate`.
"""
import logging
import math
import time
from pathlib import Path
from typing import Callable, Literal

import numpy as np
from pydantic import BaseModel

from ..core.diagnostics import classify_state_2d, monotonicity_report, symmetry_residual, tail_fit, uniqueness_probe
from ..core.energy import (
    PINNED_CELLS,
    check_coercivity,
    check_fold_inequality,
    check_rearrangement_inequality,
    effective_field_2d,
    el_residual_1d,
    energy_1d,
    energy_2d,
)
from ..core.field import closed_form_wall, initial_condition, random_admissible_profile
from ..core.nonlocal_ops import SpectralPlan1D, StrayFieldPlan2D, half_laplacian_quadrature, half_laplacian_spectral
from ..core.relax import relax_1d, relax_2d, relax_film
from ..data import write_json
from ..errors import TailFitError, ValidationFailure
from ..manifest import build_manifest
from ..schemas import AngleField2D, FilmProblem, Grid1D, Grid2D, InitRecipe, RelaxConfig, StateKind, WallProblem

logger = logging.getLogger(__name__)

Mutation = Literal["anisotropy-sign"]

WINDOW = 200.0
N_POINTS = 2048
FILM_GRID = Grid2D(nx=64, ny=128, h=0.25)
GRADIENT_TOLERANCE = 1e-5
GRADIENT_SAMPLES = 20
LEMMA_SAMPLES = 100
WALL_NUS = (1.0, 5.0, 50.0)
FD_STEP = 1e-5


class PropertyCheck(BaseModel):
    name: str
    tolerance: float
    observed: float
    passed: bool


class ValidationSummary(BaseModel):
    seed: int
    mutation: Mutation | None = None
    checks: list[PropertyCheck]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)


def _check(name: str, observed: float, tolerance: float, *, upper: bool = True) -> PropertyCheck:
    passed = observed <= tolerance if upper else observed >= tolerance
    return PropertyCheck(name=name, tolerance=tolerance, observed=float(observed), passed=bool(passed and math.isfinite(observed)))


def _residual_1d(mutation: Mutation | None) -> Callable:
    def residual(theta, problem, plan):
        values = el_residual_1d(theta, problem, check=False, plan=plan)
        if mutation == "anisotropy-sign":
            flip = 0.5 * np.sin(4.0 * theta.theta)
            flip[:PINNED_CELLS] = 0.0
            flip[-PINNED_CELLS:] = 0.0
            values = values - flip
        return values
    return residual


def _smooth_direction(rng: np.random.Generator, x: np.ndarray, spread: float) -> np.ndarray:
    centre = rng.uniform(-spread, spread)
    return rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.5) * np.exp(-((x - centre) / rng.uniform(1.0, 4.0)) ** 2)


def gradient_consistency_1d(rng: np.random.Generator, mutation: Mutation | None) -> float:
    """Worst relative mismatch between h * sum(r * v) and a central difference of the energy."""
    grid = Grid1D.symmetric(N_POINTS, WINDOW)
    residual_of = _residual_1d(mutation)
    worst = 0.0
    for wall, nu in ((90, 5.0), (180, 1.0)):
        problem = WallProblem.for_wall(wall, nu, grid)
        plan = SpectralPlan1D(grid)
        for _ in range(GRADIENT_SAMPLES):
            theta = random_admissible_profile(rng, grid, problem.alpha_limit)
            direction = _smooth_direction(rng, grid.x, WINDOW / 8)
            direction[:PINNED_CELLS] = direction[-PINNED_CELLS:] = 0.0
            plus = energy_1d(theta.with_theta(theta.theta + FD_STEP * direction), problem, check=False, plan=plan).total
            minus = energy_1d(theta.with_theta(theta.theta - FD_STEP * direction), problem, check=False, plan=plan).total
            numeric = (plus - minus) / (2.0 * FD_STEP)
            analytic = grid.h * float(np.dot(residual_of(theta, problem, plan), direction))
            worst = max(worst, abs(numeric - analytic) / max(abs(numeric), 1e-12))
    return worst


def gradient_consistency_2d(rng: np.random.Generator, mutation: Mutation | None) -> float:
    """Same check for -h^2 * sum(field * v) in 2D."""
    grid = FILM_GRID
    plan = StrayFieldPlan2D(grid)
    x, y = np.meshgrid(grid.x, grid.y, indexing="ij")
    worst = 0.0
    for _ in range(GRADIENT_SAMPLES):
        theta = np.zeros(grid.shape)
        for _ in range(4):
            kx, ky = rng.integers(0, 4, 2)
            theta += rng.uniform(-1.0, 1.0) * np.cos(math.pi * kx * x / grid.lx + rng.uniform(0, math.pi)) \
                * np.cos(math.pi * ky * y / grid.ly + rng.uniform(0, math.pi))
        field = AngleField2D(grid=grid, theta=theta)
        direction = rng.normal(size=grid.shape)
        nu = rng.uniform(1.0, 10.0)
        effective = effective_field_2d(field, nu, plan)
        if mutation == "anisotropy-sign":
            effective = effective + 0.5 * np.sin(4.0 * theta)
        plus = energy_2d(field.with_theta(theta + FD_STEP * direction), nu, plan).total
        minus = energy_2d(field.with_theta(theta - FD_STEP * direction), nu, plan).total
        numeric = (plus - minus) / (2.0 * FD_STEP)
        analytic = -grid.h ** 2 * float(np.sum(effective * direction))
        worst = max(worst, abs(numeric - analytic) / max(abs(numeric), 1e-12))
    return worst


def operator_cross_validation() -> float:
    """Relative L2 gap between the spectral and quadrature half-Laplacians on a zero-mass input."""
    grid = Grid1D.symmetric(2048, 102.4)
    x = grid.x
    u = np.exp(-x ** 2) - 0.5 * np.exp(-x ** 2 / 4.0)
    spectral = half_laplacian_spectral(u, SpectralPlan1D(grid))
    quadrature = half_laplacian_quadrature(u, grid)
    return float(np.linalg.norm(spectral - quadrature) / np.linalg.norm(spectral))


def lorentzian_error() -> float:
    """Sup error of both half-Laplacians of 1/(1+x^2) against (1-x^2)/(1+x^2)^2 on the inner half window."""
    grid = Grid1D.symmetric(4096, 409.6)
    x = grid.x
    u = 1.0 / (1.0 + x ** 2)
    exact = (1 - x ** 2) / (1 + x ** 2) ** 2
    inner = np.abs(x) <= grid.window / 4
    spectral = half_laplacian_spectral(u, SpectralPlan1D(grid))
    quadrature = half_laplacian_quadrature(u, grid, far_field=0.0)
    return float(max(np.max(np.abs(spectral - exact)[inner]), np.max(np.abs(quadrature - exact)[inner])))


def lemma_suite(rng: np.random.Generator) -> dict[str, float]:
    """Failures per lemma over LEMMA_SAMPLES random profiles, each drawn with its own nu."""
    grid = Grid1D.symmetric(512, 100.0)
    checks = {
        "fold_90": (90, check_fold_inequality), "fold_180": (180, check_fold_inequality),
        "coercivity_90": (90, check_coercivity),
        "rearrangement_90": (90, check_rearrangement_inequality),
        "rearrangement_180": (180, check_rearrangement_inequality),
    }
    worst = {}
    for name, (wall, check) in checks.items():
        failures = 0
        for _ in range(LEMMA_SAMPLES):
            problem = WallProblem.for_wall(wall, rng.uniform(0.5, 50.0), grid)
            report = check(random_admissible_profile(rng, grid, problem.alpha_limit), problem)
            failures += not report.holds
        worst[name] = failures
    return worst


def wall_suite(config: RelaxConfig) -> tuple[list[PropertyCheck], int]:
    grid = Grid1D.symmetric(N_POINTS, WINDOW)
    checks, violations = [], 0

    free = WallProblem.for_wall(90, 0.0, grid)
    relaxed, report = relax_1d(initial_condition(InitRecipe(kind="tanh_wall", args=(3.0,)), grid, free.alpha_limit), free, config)
    violations += report.lyapunov_violations
    checks.append(_check("nu=0 closed form (sup error)", float(np.max(np.abs(relaxed.theta - closed_form_wall(grid).theta))), 1e-3))
    checks.append(_check("nu=0 energy |E - 1/2|", abs(energy_1d(relaxed, free, check=False).total - 0.5), 1e-3))

    for wall in (90, 180):
        for nu in WALL_NUS:
            tag = f"{wall} nu={nu:g}"
            problem = WallProblem.for_wall(wall, nu, grid)
            start = initial_condition(InitRecipe(kind="tanh_wall", args=(3.0,)), grid, problem.alpha_limit)
            relaxed, report = relax_1d(start, problem, config)
            violations += report.lyapunov_violations
            checks.append(_check(f"{tag} converged", float(not report.converged), 0.0))
            checks.append(_check(f"{tag} monotone (max increase)", monotonicity_report(relaxed, problem.alpha_limit).max_violation, 1e-9))
            checks.append(_check(f"{tag} symmetry residual", symmetry_residual(relaxed, problem.alpha_limit), 1e-4))
            try:
                fit = tail_fit(relaxed)
                slope, crossover = fit.slope, fit.crossover_detected
            except TailFitError:
                slope, crossover = math.nan, False
            checks.append(_check(f"{tag} tail slope deviation from -2", abs(slope + 2.0), 0.3))
            if nu == max(WALL_NUS):
                checks.append(_check(f"{tag} tail crossover detected", float(crossover), 1.0, upper=False))

    inits = [InitRecipe(kind="tanh_wall", args=(1.0,)), InitRecipe(kind="tanh_wall", args=(10.0,)), InitRecipe(kind="step")]
    for nu in WALL_NUS:
        probe = uniqueness_probe(WallProblem.for_wall(90, nu, grid), inits, config)
        checks.append(_check(f"90 nu={nu:g} uniqueness (pairwise sup distance)", probe.max_pairwise_distance, 1e-4))
    return checks, violations


def film_suite(config: RelaxConfig) -> tuple[list[PropertyCheck], int]:
    checks, violations = [], 0
    small = dict(lx=8.0, ly=16.0)
    cases = [
        ("monodomain nu=0", FilmProblem(nu=0.0, **small, init=InitRecipe(kind="monodomain", args=(0.0,))), StateKind.MONODOMAIN),
        ("C state nu=5", FilmProblem(nu=5.0, **small, init=InitRecipe(kind="half_split_vertical", args=(math.pi / 2, -math.pi / 2))), StateKind.C),
        ("S state nu=5", FilmProblem(nu=5.0, **small, init=InitRecipe(kind="monodomain", args=(math.pi / 3,))), StateKind.S),
    ]
    energies = {}
    for name, problem, expected in cases:
        relaxed, report = relax_2d(initial_condition(problem.init, problem.grid), problem, config)
        violations += report.lyapunov_violations
        energies[expected] = report.final_energy
        label = classify_state_2d(relaxed)
        checks.append(_check(f"{name} classified {expected.value}", float(label.kind != expected), 0.0))
        checks.append(_check(f"{name} degree", abs(label.degree), 0.0))
    checks.append(_check("nu=5 E(C) - E(S)", energies[StateKind.C] - energies[StateKind.S], 0.0))

    half_landau = InitRecipe(kind="half_split", args=(math.pi, 0.0))
    alternates = [InitRecipe(kind="bound_pair", args=(math.pi, 0.0))]
    long_run = config.model_copy(update={"max_steps": 50000})
    for nu, pattern in ((5.0, "corners"), (10.0, "bound_pair")):
        problem = FilmProblem(nu=nu, lx=32.0, ly=64.0, init=half_landau)
        relaxed, report, _ = relax_film(problem, long_run, alternates=alternates)
        violations += report.lyapunov_violations
        label = classify_state_2d(relaxed)
        name = f"half-Landau nu={nu:g}"
        checks.append(_check(f"{name} classified {StateKind.HALF_LANDAU.value}", float(label.kind != StateKind.HALF_LANDAU), 0.0))
        checks.append(_check(f"{name} degree", abs(label.degree), 0.0))
        checks.append(_check(f"{name} open edge pattern {pattern}", float(label.vortex_pattern != pattern), 0.0))
    return checks, violations


def run_suite(seed: int = 0, mutation: Mutation | None = None) -> ValidationSummary:
    """
    <summary>
    Runs the property suite: closed form, gradient consistency, operator cross-validation, the
    lemma inequalities, the 1D wall properties at three values of nu, the 2D remanent states and the
    Lyapunov monitor.
    </summary>
    <param name="seed" type="int">Seed of the random profiles.</param>
    <param name="mutation" type="str | None">'anisotropy-sign' flips the anisotropy term of the residuals only.</param>
    <returns type="ValidationSummary">One entry per property.</returns>
    """
    rng = np.random.default_rng(seed)
    checks = [
        _check("gradient consistency 1D (relative)", gradient_consistency_1d(rng, mutation), GRADIENT_TOLERANCE),
        _check("gradient consistency 2D (relative)", gradient_consistency_2d(rng, mutation), GRADIENT_TOLERANCE),
        _check("spectral vs quadrature (relative L2)", operator_cross_validation(), 1e-6),
        _check("Lorentzian half-Laplacian (sup error)", lorentzian_error(), 1e-4),
    ]
    checks += [_check(f"{name} failures of {LEMMA_SAMPLES}", failures, 0.0) for name, failures in lemma_suite(rng).items()]
    wall_checks, wall_violations = wall_suite(RelaxConfig())
    film_checks, film_violations = film_suite(RelaxConfig(residual_tol=1e-6, energy_tol=1e-10, dt_max=5.0))
    checks += wall_checks + film_checks
    checks.append(_check("Lyapunov violations", wall_violations + film_violations, 0.0))
    return ValidationSummary(seed=seed, mutation=mutation, checks=checks)


def format_table(summary: ValidationSummary) -> str:
    width = max(len(check.name) for check in summary.checks)
    lines = [f"{'property':<{width}}  {'tolerance':>10}  {'observed':>12}  verdict"]
    for check in summary.checks:
        lines.append(f"{check.name:<{width}}  {check.tolerance:>10.3g}  {check.observed:>12.4g}  {'PASS' if check.passed else 'FAIL'}")
    return "\n".join(lines)


def cmd_validate(out_dir: Path, *, seed: int = 0, mutation: Mutation | None = None) -> ValidationSummary:
    """
    <summary>
    Runs the suite, prints the table, and writes validate.json with its manifest.
    </summary>
    <exception cref="ValidationFailure">Raised if any property fails.</exception>
    """
    started = time.perf_counter()
    summary = run_suite(seed, mutation)
    print(format_table(summary))
    target = out_dir / "validate"
    outputs = [write_json(target / "validate.json", summary)]
    manifest = build_manifest("validate", summary.model_copy(update={"checks": []}), [], seed=seed, outputs=outputs,
                              timings={"total": time.perf_counter() - started},
                              validation={"passed": summary.passed})
    write_json(target / "manifest.json", manifest)
    if not summary.passed:
        failed = [check.name for check in summary.checks if not check.passed]
        raise ValidationFailure(f"{len(failed)} propert{'y' if len(failed) == 1 else 'ies'} failed: {', '.join(failed)}")
    return summary
