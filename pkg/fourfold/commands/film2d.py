import logging
import time
from pathlib import Path

from pydantic import BaseModel

from ..core.diagnostics import classify_state_2d
from ..core.energy import energy_2d
from ..core.nonlocal_ops import StrayFieldPlan2D
from ..core.relax import relax_film
from ..data import checkpoint_writer, load_config, write_grid, write_json, write_m_csv, write_trace_csv
from ..errors import ConvergenceError
from ..manifest import build_manifest, input_hash
from ..schemas import Film2DConfig, StateKind, Termination

logger = logging.getLogger(__name__)


class FilmOutcome(BaseModel):
    """One row of film results; also what the sweep summary is built from."""
    input_hash: str
    nu: float
    lx: float
    ly: float
    init: str
    status: str
    state: StateKind | None = None
    degree: int | None = None
    n_vortices: int | None = None
    final_energy: float | None = None
    final_residual: float | None = None
    termination: Termination | None = None
    steps: int | None = None
    out_dir: str = ""
    error: str = ""


def film_hash(config: Film2DConfig) -> str:
    grid = config.problem().grid
    return input_hash("film2d", config.model_dump(mode="json"), [{"kind": "Grid2D", **grid.model_dump(mode="json")}])


def film_dir(config: Film2DConfig, out_dir: Path) -> Path:
    problem = config.problem()
    return out_dir / f"film_{problem.lx:g}x{problem.ly:g}_nu{problem.nu:g}_{film_hash(config)[:8]}"


def run_film(config: Film2DConfig, out_dir: Path) -> FilmOutcome:
    """
    <summary>
    Relaxes one sample and writes its artifacts: theta grid (binary), m field CSV, state label,
    energy breakdown, trace, an optional physical-units report, and the manifest. With alternate starts
    the kept result is the lowest-energy one and starts.json lists them all.
    </summary>
    <param name="config" type="Film2DConfig">The run configuration.</param>
    <param name="out_dir" type="Path">Parent directory; the run gets its own subdirectory.</param>
    <returns type="FilmOutcome">Summary of the run.</returns>
    """
    started = time.perf_counter()
    problem = config.problem()
    grid = problem.grid
    run_dir = film_dir(config, out_dir)
    plan = StrayFieldPlan2D(grid)

    checkpoint = None
    if config.relax.checkpoint_every:
        checkpoint = checkpoint_writer(run_dir / "checkpoints", grid_2d=grid, nu=problem.nu)
    relaxed, report, starts = relax_film(problem, config.relax, alternates=config.alternates, checkpoint=checkpoint,
                                         plan=plan)
    relaxed_at = time.perf_counter()

    label = classify_state_2d(relaxed)
    energy = energy_2d(relaxed, problem.nu, plan)
    outputs = [
        write_grid(run_dir / "theta.grid", relaxed),
        write_m_csv(run_dir / "m.csv", relaxed),
        write_json(run_dir / "state.json", label),
        write_json(run_dir / "energy.json", energy),
        write_trace_csv(run_dir / "trace.csv", report),
        write_json(run_dir / "relax.json", report),
    ]
    if config.alternates:
        outputs.append(write_json(run_dir / "starts.json", {"starts": [s.model_dump(mode="json") for s in starts]}))
    if config.physical is not None:
        physical = config.physical
        outputs.append(write_json(run_dir / "physical.json", {
            "nu": physical.nu, "bloch_width_nm": physical.bloch_width_nm,
            "lx_nm": problem.lx * physical.bloch_width_nm, "ly_nm": problem.ly * physical.bloch_width_nm,
        }))

    validation = {"termination": report.termination, "lyapunov_violations": report.lyapunov_violations,
                  "state": label.kind.value, "degree": label.degree,
                  "start": next(s.init for s in starts if s.kept)}
    manifest = build_manifest("film2d", config, [grid], outputs=outputs, validation=validation,
                              timings={"relax": relaxed_at - started, "total": time.perf_counter() - started})
    write_json(run_dir / "manifest.json", manifest)
    logger.info("film %gx%g nu=%g: %s, %s, manifest %s -> %s", problem.lx, problem.ly, problem.nu,
                report.termination, label.kind.value, manifest.input_hash[:12], run_dir)
    return FilmOutcome(
        input_hash=manifest.input_hash, nu=problem.nu, lx=problem.lx, ly=problem.ly, init=str(problem.init),
        status="converged" if report.converged else "not_converged", state=label.kind, degree=label.degree,
        n_vortices=len(label.vortices), final_energy=energy.total, final_residual=report.final_residual,
        termination=report.termination, steps=report.steps_taken, out_dir=str(run_dir),
    )


def cmd_film2d(config_path: Path, out_dir: Path, *, resolution: float | None = None) -> FilmOutcome:
    """
    <summary>
    Runs a film2d config.
    </summary>
    <exception cref="ConfigError">Raised for an unreadable or invalid config.</exception>
    <exception cref="ConvergenceError">Raised after the artifacts are written if the run did not converge.</exception>
    """
    config = load_config(config_path, Film2DConfig)
    if resolution is not None:
        config = config.model_copy(update={"resolution": resolution})
    outcome = run_film(config, out_dir)
    if outcome.termination != "converged":
        raise ConvergenceError(f"film {outcome.lx:g}x{outcome.ly:g} nu={outcome.nu:g} ended {outcome.termination}")
    return outcome
