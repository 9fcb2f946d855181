import hashlib
import json
import os
from pathlib import Path
from typing import Any

from pydantic import BaseModel

from . import __version__
from .schemas import Grid1D, Grid2D, RunManifest


def canonical_json(payload: Any) -> str:
    """Sorted keys, compact separators; the byte form that gets hashed."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def input_hash(command: str, config: dict[str, Any], grids: list[dict[str, Any]], seed: int | None = None) -> str:
    """
    <summary>
    sha256 over everything that determines a run's outputs: command, code version, validated
    config, grids and seed.
    </summary>
    <returns type="str">Hex digest.</returns>
    """
    payload = {"command": command, "version": __version__, "config": config, "grids": grids, "seed": seed}
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def file_digest(path: str | os.PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def build_manifest(command: str, config: BaseModel, grids: list[Grid1D | Grid2D], *, seed: int | None = None,
                   timings: dict[str, float] | None = None, outputs: list[Path] | None = None,
                   validation: dict[str, Any] | None = None) -> RunManifest:
    """
    <summary>
    Assembles the reproducibility record of one run. Output files are listed by name with their
    sha256 digests.
    </summary>
    <param name="command" type="str">wall1d, film2d, sweep or validate.</param>
    <param name="config" type="BaseModel">The validated configuration actually used.</param>
    <param name="grids" type="list">Grid descriptors of the run.</param>
    <returns type="RunManifest">The manifest; its input_hash excludes timings and outputs.</returns>
    """
    snapshot = config.model_dump(mode="json")
    grid_records = [{"kind": type(grid).__name__, **grid.model_dump(mode="json")} for grid in grids]
    return RunManifest(
        command=command,
        version=__version__,
        config=snapshot,
        grids=grid_records,
        seed=seed,
        input_hash=input_hash(command, snapshot, grid_records, seed),
        timings=timings or {},
        outputs={path.name: file_digest(path) for path in outputs or []},
        validation=validation or {},
    )
