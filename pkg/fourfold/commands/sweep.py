import asyncio
import csv
import io
import logging
from pathlib import Path

import numpy as np

from ..data import atomic_write_text, load_config
from ..schemas import Film2DConfig, SweepConfig
from .film2d import FilmOutcome, film_hash, run_film

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ["input_hash", "nu", "lx", "ly", "init", "status", "state", "degree", "n_vortices",
                   "final_energy", "final_residual", "termination", "steps", "out_dir", "error"]


def unique_runs(runs: list[Film2DConfig]) -> list[tuple[str, Film2DConfig]]:
    """Drops runs whose input hash has been seen before, keeping the first occurrence."""
    seen: set[str] = set()
    unique = []
    for config in runs:
        digest = film_hash(config)
        if digest in seen:
            logger.info("skipping duplicate run %s", digest[:12])
            continue
        seen.add(digest)
        unique.append((digest, config))
    return unique


async def run_one(semaphore: asyncio.Semaphore, digest: str, config: Film2DConfig, out_dir: Path) -> FilmOutcome:
    """
    <summary>
    Runs one film relaxation in a worker thread, bounded by the semaphore. Failures become a
    `failed` record instead of aborting the sweep.
    </summary>
    """
    async with semaphore:
        try:
            return await asyncio.to_thread(run_film, config, out_dir)
        except Exception as exc:
            logger.warning("run %s failed: %s", digest[:12], exc)
            problem = config.problem()
            return FilmOutcome(input_hash=digest, nu=problem.nu, lx=problem.lx, ly=problem.ly,
                               init=str(problem.init), status="failed", error=str(exc))


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value) if np.isfinite(value) else str(value)
    return str(getattr(value, "value", value))


def summary_csv(outcomes: list[FilmOutcome]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for outcome in outcomes:
        record = outcome.model_dump()
        writer.writerow([_cell(record[column]) for column in SUMMARY_COLUMNS])
    return buffer.getvalue()


async def run_sweep(config: SweepConfig, out_dir: Path, *, threads: int = 1) -> list[FilmOutcome]:
    """
    <summary>
    Runs the cartesian product of nu and sizes with at most `threads` relaxations in flight, then
    writes summary.csv from the collected outcomes in sweep order.
    </summary>
    <param name="config" type="SweepConfig">The sweep.</param>
    <param name="out_dir" type="Path">Output root.</param>
    <param name="threads" type="int">Concurrent runs.</param>
    <returns type="list[FilmOutcome]">One outcome per distinct run.</returns>
    """
    runs = unique_runs(config.runs())
    semaphore = asyncio.Semaphore(max(1, threads))
    logger.info("sweep: %d distinct runs, %d at a time", len(runs), max(1, threads))
    outcomes = await asyncio.gather(*(run_one(semaphore, digest, run, out_dir) for digest, run in runs))
    atomic_write_text(out_dir / "summary.csv", summary_csv(list(outcomes)))
    return list(outcomes)


def cmd_sweep(config_path: Path, out_dir: Path, *, resolution: float | None = None, threads: int = 1) -> list[FilmOutcome]:
    config = load_config(config_path, SweepConfig)
    if resolution is not None:
        config = config.model_copy(update={"resolution": resolution})
    return asyncio.run(run_sweep(config, out_dir, threads=threads))
