import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import fft
from scipy.interpolate import CubicSpline

from ..errors import PreconditionError
from ..schemas import (
    AngleField1D,
    AngleField2D,
    FilmProblem,
    InitRecipe,
    RelaxConfig,
    RelaxReport,
    StartRecord,
    Termination,
    WallProblem,
)
from .energy import PINNED_CELLS, energy_and_field_2d, energy_and_residual_1d
from .field import initial_condition, level_crossing
from .nonlocal_ops import SpectralPlan1D, StrayFieldPlan2D

logger = logging.getLogger(__name__)

# Relative energy rise tolerated on an accepted step.
LYAPUNOV_SLACK = 1e-10
EXPLICIT_CFL = 0.2
DT_GROWTH = 1.2

Evaluator = Callable[[np.ndarray], tuple[float, np.ndarray]]
Preconditioner = Callable[[np.ndarray, float], np.ndarray]
Checkpoint = Callable[[int, np.ndarray, float], None]


@dataclass
class _Trace:
    steps: list[int] = field(default_factory=list)
    energy: list[float] = field(default_factory=list)
    residual: list[float] = field(default_factory=list)
    dt: list[float] = field(default_factory=list)

    def record(self, step: int, energy: float, residual: float, dt: float) -> None:
        self.steps.append(step)
        self.energy.append(energy)
        self.residual.append(residual)
        self.dt.append(dt)


def _gradient_flow(theta: np.ndarray, evaluate: Evaluator, precondition: Preconditioner, config: RelaxConfig, *,
                   explicit_dt: float, label: str, checkpoint: Checkpoint | None = None) -> tuple[np.ndarray, RelaxReport]:
    """
    <summary>
    Runs theta_t = -R(theta) until the residual and the per-step energy decrease are both below
    tolerance. Any step that raises the energy is rejected and retried with half the step; below
    dt_min the run is abandoned as diverged. After an accepted step dt grows only if the residual
    fell. It halves if the residual more than doubled, or if the residual did not fall while the
    energy decrease stayed below energy_tol. Explicit steps never exceed explicit_dt.
    </summary>
    <param name="theta" type="np.ndarray">Starting field.</param>
    <param name="evaluate" type="Callable">Returns (total energy, residual R = dE/dtheta).</param>
    <param name="precondition" type="Callable">Returns the semi-implicit increment for (R, dt).</param>
    <param name="config" type="RelaxConfig">Stepping and termination controls.</param>
    <param name="explicit_dt" type="float">Largest stable explicit step for the grid.</param>
    <returns type="tuple[np.ndarray, RelaxReport]">The final field and its convergence record.</returns>
    """
    started = time.perf_counter()
    explicit = config.stepping == "explicit"
    theta = np.array(theta, dtype=float)
    energy, residual = evaluate(theta)
    residual_norm = float(np.max(np.abs(residual)))
    dt_cap = min(config.dt_max, explicit_dt) if explicit else config.dt_max
    dt = min(config.dt, dt_cap)

    trace = _Trace()
    trace.record(0, energy, residual_norm, dt)
    steps = rejected = 0
    termination: Termination | None = None
    if not math.isfinite(energy):
        termination = "diverged"
    elif residual_norm <= config.residual_tol:
        termination = "converged"

    while termination is None and steps < config.max_steps:
        delta = -dt * residual if explicit else precondition(residual, dt)
        candidate = theta + delta
        new_energy, new_residual = evaluate(candidate)
        rise = new_energy - energy

        if not math.isfinite(new_energy) or rise > LYAPUNOV_SLACK * abs(energy):
            rejected += 1
            dt *= 0.5
            if dt < config.dt_min:
                logger.warning("%s: backtracking exhausted at step %d (dt=%.3e, energy=%.12g)", label, steps, dt, energy)
                termination = "diverged"
            continue

        previous_norm = residual_norm
        theta, energy, residual = candidate, new_energy, new_residual
        residual_norm = float(np.max(np.abs(residual)))
        steps += 1
        if steps % config.trace_every == 0:
            trace.record(steps, energy, residual_norm, dt)
            logger.debug("%s: step %d dt=%.3e energy=%.15g residual=%.3e", label, steps, dt, energy, residual_norm)
        if checkpoint is not None and config.checkpoint_every and steps % config.checkpoint_every == 0:
            checkpoint(steps, theta.copy(), energy)
        if residual_norm <= config.residual_tol and -rise <= config.energy_tol:
            termination = "converged"
        elif residual_norm < previous_norm:
            dt = min(dt * DT_GROWTH, dt_cap)
        elif residual_norm > 2.0 * previous_norm or rise > -config.energy_tol:
            dt = max(0.5 * dt, config.dt_min)

    if trace.steps[-1] != steps:
        trace.record(steps, energy, residual_norm, dt)
    energies = np.array(trace.energy)
    violations = int(np.sum(np.diff(energies) > LYAPUNOV_SLACK * np.abs(energies[:-1])))
    report = RelaxReport(
        steps_taken=steps, rejected_steps=rejected, final_residual=residual_norm, final_energy=energy,
        energy_trace=trace.energy, residual_trace=trace.residual, trace_steps=trace.steps, dt_trace=trace.dt,
        termination=termination or "max_steps", wall_clock=time.perf_counter() - started,
        lyapunov_violations=violations)
    logger.info("%s: %s after %d steps (%d rejected), energy=%.12g residual=%.3e",
                label, report.termination, steps, rejected, energy, residual_norm)
    return theta, report


def merge_reports(first: RelaxReport, second: RelaxReport) -> RelaxReport:
    """Concatenates two consecutive relaxations into one record; the second decides the outcome."""
    offset = first.steps_taken
    return RelaxReport(
        steps_taken=first.steps_taken + second.steps_taken,
        rejected_steps=first.rejected_steps + second.rejected_steps,
        final_residual=second.final_residual,
        final_energy=second.final_energy,
        energy_trace=first.energy_trace + second.energy_trace,
        residual_trace=first.residual_trace + second.residual_trace,
        trace_steps=first.trace_steps + [offset + s for s in second.trace_steps],
        dt_trace=first.dt_trace + second.dt_trace,
        termination=second.termination,
        wall_clock=first.wall_clock + second.wall_clock,
        lyapunov_violations=first.lyapunov_violations + second.lyapunov_violations,
    )


# --- 1D ---

def pin_far_field(theta: np.ndarray, alpha_limit: float) -> np.ndarray:
    theta = np.array(theta, dtype=float)
    theta[:PINNED_CELLS] = alpha_limit
    theta[-PINNED_CELLS:] = 0.0
    return theta


def _preconditioner_1d(problem: WallProblem) -> Preconditioner:
    grid = problem.grid
    k = 2.0 * math.pi * fft.rfftfreq(grid.n_points, d=grid.h)
    stiffness = (2.0 - 2.0 * np.cos(k * grid.h)) / grid.h ** 2 + 0.5 * problem.nu * np.abs(k) + 1.0

    def solve(residual: np.ndarray, dt: float) -> np.ndarray:
        delta = -dt * fft.irfft(fft.rfft(residual) / (1.0 + dt * stiffness), n=residual.size)
        delta[:PINNED_CELLS] = 0.0
        delta[-PINNED_CELLS:] = 0.0
        return delta

    return solve


def recentre_1d(theta: AngleField1D, problem: WallProblem) -> AngleField1D:
    """
    <summary>
    Translates a profile so that it crosses alpha_limit/2 at x = 0. Samples are resampled on a
    cubic spline; points shifted beyond the window take the far-field values.
    </summary>
    <param name="theta" type="AngleField1D">A wall profile.</param>
    <param name="problem" type="WallProblem">Problem the profile belongs to.</param>
    <returns type="AngleField1D">The recentred profile, with the far field pinned.</returns>
    <exception cref="DomainError">Raised if the profile never reaches alpha_limit/2.</exception>
    """
    x = theta.grid.x
    shift = level_crossing(theta, 0.5 * problem.alpha_limit)
    target = x + shift
    inside = CubicSpline(x, theta.theta)(np.clip(target, x[0], x[-1]))
    values = np.where(target < x[0], problem.alpha_limit, np.where(target > x[-1], 0.0, inside))
    logger.debug("recentred profile by %.6g", shift)
    return theta.with_theta(pin_far_field(values, problem.alpha_limit))


def relax_1d(theta0: AngleField1D, problem: WallProblem, config: RelaxConfig = RelaxConfig(), *,
             checkpoint: Checkpoint | None = None, plan: SpectralPlan1D | None = None) -> tuple[AngleField1D, RelaxReport]:
    """
    <summary>
    Gradient flow of the 1D wall energy with the far field pinned to (alpha_limit, 0). A run that does
    not diverge is recentred so that theta(0) = alpha_limit/2 and, if `config.polish` is set, relaxed
    once more from the recentred profile. Without polishing the report describes the recentred profile,
    and a run whose recentred residual misses residual_tol is not reported as converged.
    </summary>
    <param name="theta0" type="AngleField1D">Initial profile on problem.grid.</param>
    <param name="problem" type="WallProblem">The wall problem.</param>
    <param name="config" type="RelaxConfig">Stepping and termination controls.</param>
    <param name="checkpoint" type="Callable | None">Called as (step, theta, energy) every checkpoint_every steps.</param>
    <param name="plan" type="SpectralPlan1D | None">Reusable transform plan.</param>
    <returns type="tuple[AngleField1D, RelaxReport]">The relaxed profile and its convergence record.</returns>
    """
    plan = plan or SpectralPlan1D(problem.grid, problem.boundary_tolerance)
    precondition = _preconditioner_1d(problem)
    label = f"wall{problem.wall} nu={problem.nu:g}"

    def evaluate(values: np.ndarray) -> tuple[float, np.ndarray]:
        breakdown, residual = energy_and_residual_1d(values, problem, plan)
        return breakdown.total, residual

    explicit_dt = EXPLICIT_CFL * problem.grid.h ** 2
    start = pin_far_field(theta0.theta, problem.alpha_limit)
    values, report = _gradient_flow(start, evaluate, precondition, config, explicit_dt=explicit_dt, label=label,
                                    checkpoint=checkpoint)
    if report.termination == "diverged":
        return theta0.with_theta(values), report

    centred = recentre_1d(theta0.with_theta(values), problem)
    if not config.polish:
        energy, residual = evaluate(centred.theta)
        final_residual = float(np.max(np.abs(residual)))
        termination = report.termination
        if termination == "converged" and final_residual > config.residual_tol:
            logger.warning("%s: recentring raised the residual to %.3e, above tolerance %.1e",
                           label, final_residual, config.residual_tol)
            termination = "max_steps"
        return centred, report.model_copy(update={"final_energy": energy, "final_residual": final_residual,
                                                  "termination": termination})

    offset = report.steps_taken
    shifted = None if checkpoint is None else (lambda step, field_, energy: checkpoint(offset + step, field_, energy))
    values, polish = _gradient_flow(centred.theta, evaluate, precondition, config, explicit_dt=explicit_dt,
                                    label=f"{label} polish", checkpoint=shifted)
    return theta0.with_theta(values), merge_reports(report, polish)


# --- 2D ---

def _preconditioner_2d(nu: float, plan: StrayFieldPlan2D) -> Preconditioner:
    grid = plan.grid
    eigen = [(2.0 - 2.0 * np.cos(math.pi * np.arange(n) / n)) / grid.h ** 2 for n in (grid.nx, grid.ny)]
    laplacian = eigen[0][:, None] + eigen[1][None, :]
    stiffness = laplacian + 0.5 * nu * np.sqrt(laplacian) + 1.0

    def solve(residual: np.ndarray, dt: float) -> np.ndarray:
        return -dt * fft.idctn(fft.dctn(residual, type=2, norm="ortho") / (1.0 + dt * stiffness), type=2, norm="ortho")

    return solve


def relax_2d(theta0: AngleField2D, problem: FilmProblem, config: RelaxConfig = RelaxConfig(), *,
             checkpoint: Checkpoint | None = None, plan: StrayFieldPlan2D | None = None) -> tuple[AngleField2D, RelaxReport]:
    """
    <summary>
    Gradient flow theta_t = Laplacian(theta) - 1/4 sin 4 theta + t . h_stray on the rectangle with the
    natural (Neumann) boundary condition. The problem supplies nu and the grid; its init recipe is
    ignored because theta0 is the starting field.
    </summary>
    <param name="theta0" type="AngleField2D">Initial field on problem.grid.</param>
    <param name="problem" type="FilmProblem">The film problem.</param>
    <param name="config" type="RelaxConfig">Stepping and termination controls.</param>
    <param name="checkpoint" type="Callable | None">Called as (step, theta, energy) every checkpoint_every steps.</param>
    <param name="plan" type="StrayFieldPlan2D | None">Kernel plan for problem.grid.</param>
    <returns type="tuple[AngleField2D, RelaxReport]">The relaxed field and its convergence record.</returns>
    <exception cref="PreconditionError">Raised when theta0 or the plan lives on another grid.</exception>
    """
    grid = problem.grid
    if theta0.grid != grid:
        raise PreconditionError(f"initial field lives on {theta0.grid.nx}x{theta0.grid.ny} (h={theta0.grid.h}), "
                                f"problem grid is {grid.nx}x{grid.ny} (h={grid.h})")
    plan = plan or StrayFieldPlan2D(grid)
    plan.check(grid)
    nu = problem.nu

    def evaluate(values: np.ndarray) -> tuple[float, np.ndarray]:
        breakdown, effective = energy_and_field_2d(values, nu, plan)
        return breakdown.total, -effective

    label = f"film {problem.lx:g}x{problem.ly:g} nu={nu:g}"
    values, report = _gradient_flow(theta0.theta, evaluate, _preconditioner_2d(nu, plan), config,
                                    explicit_dt=EXPLICIT_CFL * grid.h ** 2, label=label, checkpoint=checkpoint)
    return theta0.with_theta(values), report


def relax_film(problem: FilmProblem, config: RelaxConfig = RelaxConfig(), *, alternates: Sequence[InitRecipe] = (),
               checkpoint: Checkpoint | None = None,
               plan: StrayFieldPlan2D | None = None) -> tuple[AngleField2D, RelaxReport, list[StartRecord]]:
    """
    <summary>
    Relaxes the problem from its own init recipe and from each alternate recipe, and keeps the
    lowest-energy result among the runs that did not diverge. Gradient flow stays in the basin of its
    start, so competing remanent states are only compared when each one is seeded.
    </summary>
    <param name="problem" type="FilmProblem">The film problem; problem.init is the primary start.</param>
    <param name="config" type="RelaxConfig">Stepping and termination controls, shared by all starts.</param>
    <param name="alternates" type="Sequence[InitRecipe]">Further starts.</param>
    <param name="checkpoint" type="Callable | None">Checkpoint hook of the primary start only.</param>
    <param name="plan" type="StrayFieldPlan2D | None">Kernel plan for problem.grid, shared by all starts.</param>
    <returns type="tuple[AngleField2D, RelaxReport, list[StartRecord]]">The kept field and report, and one record per start.</returns>
    """
    grid = problem.grid
    plan = plan or StrayFieldPlan2D(grid)
    runs = []
    for index, recipe in enumerate([problem.init, *alternates]):
        relaxed, report = relax_2d(initial_condition(recipe, grid), problem, config,
                                   checkpoint=checkpoint if index == 0 else None, plan=plan)
        runs.append((recipe, relaxed, report))

    finished = [i for i, (_, _, report) in enumerate(runs) if report.termination != "diverged"] or [0]
    best = min(finished, key=lambda i: runs[i][2].final_energy)
    records = [StartRecord(init=str(recipe), final_energy=report.final_energy, termination=report.termination,
                           steps=report.steps_taken, kept=i == best)
               for i, (recipe, _, report) in enumerate(runs)]
    if len(runs) > 1:
        logger.info("film %gx%g nu=%g: kept %s of %d starts", problem.lx, problem.ly, problem.nu, runs[best][0], len(runs))
    return runs[best][1], runs[best][2], records
