import logging
import math
import time
from pathlib import Path

import numpy as np

from ..core.diagnostics import monotonicity_report, splitting_report, symmetry_residual, tail_fit
from ..core.energy import el_residual_1d, energy_1d
from ..core.field import closed_form_wall, initial_condition
from ..core.nonlocal_ops import SpectralPlan1D
from ..core.relax import relax_1d
from ..data import (
    checkpoint_writer,
    load_config,
    write_json,
    write_profile_csv,
    write_tail_csv,
    write_trace_csv,
)
from ..errors import ConvergenceError, DomainError, TailFitError
from ..manifest import build_manifest
from ..schemas import RunManifest, Wall1DConfig

logger = logging.getLogger(__name__)

CLOSED_FORM_TOLERANCE = 1e-3


def _closed_form_check(theta, energy: float) -> dict:
    error = float(np.max(np.abs(theta.theta - closed_form_wall(theta.grid).theta)))
    energy_error = abs(energy - 0.5)
    return {
        "closed_form_sup_error": error,
        "closed_form_energy_error": energy_error,
        "closed_form_passed": error < CLOSED_FORM_TOLERANCE and energy_error < CLOSED_FORM_TOLERANCE,
    }


def run_wall(config: Wall1DConfig, nu: float, out_dir: Path) -> RunManifest:
    """
    <summary>
    Relaxes one wall and writes its artifacts: profile, energy, tail fit and tail CSV, trace,
    splitting report (180 degree walls) and manifest.
    </summary>
    <param name="config" type="Wall1DConfig">The run configuration.</param>
    <param name="nu" type="float">The entry of config.nu to run.</param>
    <param name="out_dir" type="Path">Directory for this wall's artifacts.</param>
    <returns type="RunManifest">The manifest written next to the artifacts.</returns>
    """
    started = time.perf_counter()
    problem = config.problem(nu)
    plan = SpectralPlan1D(problem.grid, problem.boundary_tolerance)
    start = initial_condition(config.init, problem.grid, problem.alpha_limit)

    checkpoint = None
    if config.relax.checkpoint_every:
        checkpoint = checkpoint_writer(
            out_dir / "checkpoints", grid_1d=problem.grid, nu=nu, beta=problem.beta,
            residual_of=lambda values: el_residual_1d(start.with_theta(values), problem, check=False, plan=plan))
    relaxed, report = relax_1d(start, problem, config.relax, checkpoint=checkpoint, plan=plan)
    relaxed_at = time.perf_counter()

    residual = el_residual_1d(relaxed, problem, check=False, plan=plan)
    energy = energy_1d(relaxed, problem, check=False, plan=plan)
    outputs = [
        write_profile_csv(out_dir / "profile.csv", relaxed, residual),
        write_json(out_dir / "energy.json", energy),
        write_tail_csv(out_dir / "tail.csv", relaxed),
        write_trace_csv(out_dir / "trace.csv", report),
        write_json(out_dir / "relax.json", report),
    ]
    try:
        outputs.append(write_json(out_dir / "tail_fit.json", tail_fit(relaxed)))
    except TailFitError as exc:
        logger.warning("wall%d nu=%g: %s", config.wall, nu, exc.detail)
        outputs.append(write_json(out_dir / "tail_fit.json", {"error": exc.detail}))

    validation: dict = {"termination": report.termination, "lyapunov_violations": report.lyapunov_violations}
    if report.termination != "diverged":
        monotonicity = monotonicity_report(relaxed, problem.alpha_limit)
        validation.update(max_violation=monotonicity.max_violation, strict_in_core=monotonicity.strict_in_core,
                          symmetry_residual=symmetry_residual(relaxed, problem.alpha_limit))
        if config.wall == 180:
            try:
                outputs.append(write_json(out_dir / "splitting.json", splitting_report(relaxed)))
            except DomainError as exc:
                logger.warning("wall180 nu=%g: %s", nu, exc.detail)
    if config.wall == 90 and nu == 0:
        validation.update(_closed_form_check(relaxed, energy.total))

    single = config.model_copy(update={"nu": [nu]})
    manifest = build_manifest("wall1d", single, [problem.grid], outputs=outputs, validation=validation,
                              timings={"relax": relaxed_at - started, "total": time.perf_counter() - started})
    write_json(out_dir / "manifest.json", manifest)
    logger.info("wall%d nu=%g: %s, E=%.10g, manifest %s -> %s", config.wall, nu, report.termination,
                energy.total, manifest.input_hash[:12], out_dir)
    return manifest


def cmd_wall1d(config_path: Path, out_dir: Path, *, resolution: float | None = None) -> list[RunManifest]:
    """
    <summary>
    Runs every nu of a wall1d config, one output directory per wall.
    </summary>
    <exception cref="ConfigError">Raised for an unreadable or invalid config.</exception>
    <exception cref="ConvergenceError">Raised after all artifacts are written if any run failed to converge.</exception>
    """
    config = load_config(config_path, Wall1DConfig)
    if resolution is not None:
        config = config.with_resolution(resolution)
    manifests = [run_wall(config, nu, out_dir / f"wall{config.wall}_nu{nu:g}") for nu in config.nu]
    failed = [f"nu={nu:g} ({m.validation['termination']})" for nu, m in zip(config.nu, manifests)
              if m.validation["termination"] != "converged"]
    if failed:
        raise ConvergenceError(f"wall{config.wall}: no convergence for {', '.join(failed)}")
    return manifests


def wall_summary(manifests: list[RunManifest]) -> list[str]:
    lines = []
    for manifest in manifests:
        nu = manifest.config["nu"][0]
        validation = manifest.validation
        symmetry = validation.get("symmetry_residual", math.nan)
        lines.append(f"nu={nu:g} {validation['termination']} symmetry={symmetry:.2e} hash={manifest.input_hash[:12]}")
    return lines
