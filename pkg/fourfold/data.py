import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Callable, TypeVar

import numpy as np
from pydantic import BaseModel, ValidationError

from .core.field import magnetization_of
from .errors import ConfigError, FourfoldError
from .schemas import AngleField1D, AngleField2D, Grid1D, Grid2D, RelaxReport

logger = logging.getLogger(__name__)

ConfigModel = TypeVar("ConfigModel", bound=BaseModel)

FLOAT_FORMAT = "%.17g"
GRID_MAGIC = "fourfold-grid v1"
GRID_HEADER_LINES = 8


# --- Configuration ---

def load_config(path: str | os.PathLike, model: type[ConfigModel]) -> ConfigModel:
    """
    <summary>
    Reads a JSON run configuration and validates it against its schema.
    </summary>
    <param name="path" type="str | PathLike">Location of the JSON document.</param>
    <param name="model" type="type[BaseModel]">Wall1DConfig, Film2DConfig or SweepConfig.</param>
    <returns type="BaseModel">The validated configuration.</returns>
    <exception cref="ConfigError">Raised if the file is missing, is not JSON, or violates the schema.</exception>
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    try:
        return model.model_validate_json(text)
    except ValidationError as exc:
        problems = "; ".join(f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}" for err in exc.errors())
        raise ConfigError(f"invalid config {path}: {problems}") from exc


def dump_config(config: BaseModel) -> str:
    return json.dumps(config.model_dump(mode="json"), sort_keys=True, indent=2)


# --- Atomic writes ---

def atomic_write_bytes(path: str | os.PathLike, payload: bytes) -> Path:
    """
    <summary>
    Writes to a temporary file in the target directory and moves it into place, so readers see
    either the old file or the complete new one.
    </summary>
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handle, temp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(handle, "wb") as f:
            f.write(payload)
            f.flush()
            os.fsync(f.fileno())
        os.replace(temp, path)
    except BaseException:
        Path(temp).unlink(missing_ok=True)
        raise
    return path


def atomic_write_text(path: str | os.PathLike, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def write_json(path: str | os.PathLike, payload: BaseModel | dict[str, Any]) -> Path:
    data = payload.model_dump(mode="json") if isinstance(payload, BaseModel) else payload
    return atomic_write_text(path, json.dumps(data, sort_keys=True, indent=2) + "\n")


def _csv_text(header: str, columns: list[np.ndarray], fmt: str | list[str] = FLOAT_FORMAT) -> str:
    buffer = io.StringIO()
    np.savetxt(buffer, np.column_stack(columns), fmt=fmt, delimiter=",", header=header, comments="")
    return buffer.getvalue()


# --- 1D artifacts ---

def write_profile_csv(path: str | os.PathLike, theta: AngleField1D, residual: np.ndarray) -> Path:
    return atomic_write_text(path, _csv_text("x,theta,el_residual", [theta.grid.x, theta.theta, residual]))


def read_profile_csv(path: str | os.PathLike) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Returns the x, theta and el_residual columns of a profile CSV."""
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return table[:, 0], table[:, 1], table[:, 2]


def write_tail_csv(path: str | os.PathLike, theta: AngleField1D) -> Path:
    """Log-log view of the right tail: samples with x > 0 and theta > 0."""
    x, values = theta.grid.x, theta.theta
    keep = (x > 0) & (values > 0)
    columns = [x[keep], values[keep], np.log10(x[keep]), np.log10(values[keep])]
    return atomic_write_text(path, _csv_text("x,theta,log10_x,log10_theta", columns))


def write_trace_csv(path: str | os.PathLike, report: RelaxReport) -> Path:
    columns = [np.array(report.trace_steps), np.array(report.energy_trace),
               np.array(report.residual_trace), np.array(report.dt_trace)]
    return atomic_write_text(path, _csv_text("step,energy,residual,dt", columns, fmt=["%d"] + [FLOAT_FORMAT] * 3))


# --- 2D artifacts ---

def write_m_csv(path: str | os.PathLike, theta: AngleField2D) -> Path:
    """Magnetization at cell centres, one row per cell in C order (x slowest)."""
    grid = theta.grid
    x, y = np.meshgrid(grid.x, grid.y, indexing="ij")
    m1, m2 = magnetization_of(theta)
    return atomic_write_text(path, _csv_text("x,y,m1,m2", [x.ravel(), y.ravel(), m1.ravel(), m2.ravel()]))


def grid_header(grid: Grid2D) -> bytes:
    lines = [GRID_MAGIC, f"nx {grid.nx}", f"ny {grid.ny}", f"h {grid.h!r}", "dtype <f8", "order C", "field theta", "end"]
    return ("\n".join(lines) + "\n").encode("ascii")


def write_grid(path: str | os.PathLike, theta: AngleField2D) -> Path:
    """
    <summary>
    Flat binary theta grid: an 8-line ASCII header followed by nx*ny little-endian float64 values
    in C order, index [i, j] with i along x.
    </summary>
    """
    body = np.ascontiguousarray(theta.theta, dtype="<f8").tobytes(order="C")
    return atomic_write_bytes(path, grid_header(theta.grid) + body)


def read_grid(path: str | os.PathLike) -> AngleField2D:
    """
    <summary>
    Reads a file written by write_grid.
    </summary>
    <exception cref="FourfoldError">Raised if the header is malformed or the payload has the wrong size.</exception>
    """
    raw = Path(path).read_bytes()
    lines = raw.split(b"\n", GRID_HEADER_LINES)
    if len(lines) != GRID_HEADER_LINES + 1:
        raise FourfoldError(f"{path}: truncated grid header")
    header = [line.decode("ascii", errors="replace") for line in lines[:GRID_HEADER_LINES]]
    expected = {0: GRID_MAGIC, 4: "dtype <f8", 5: "order C", 6: "field theta", 7: "end"}
    for index, text in expected.items():
        if header[index] != text:
            raise FourfoldError(f"{path}: header line {index + 1} is {header[index]!r}, expected {text!r}")
    try:
        fields = {key: value for key, value in (line.split(" ", 1) for line in header[1:4])}
        grid = Grid2D(nx=int(fields["nx"]), ny=int(fields["ny"]), h=float(fields["h"]))
    except (KeyError, ValueError) as exc:
        raise FourfoldError(f"{path}: malformed grid header ({exc})") from exc
    body = lines[GRID_HEADER_LINES]
    if len(body) != grid.nx * grid.ny * 8:
        raise FourfoldError(f"{path}: payload has {len(body)} bytes, expected {grid.nx * grid.ny * 8}")
    values = np.frombuffer(body, dtype="<f8").reshape(grid.shape).astype(float)
    return AngleField2D(grid=grid, theta=values)


# --- Checkpoints ---

def checkpoint_writer(directory: str | os.PathLike, *, grid_1d: Grid1D | None = None, grid_2d: Grid2D | None = None,
                      nu: float, beta: float | None = None,
                      residual_of: Callable[[np.ndarray], np.ndarray] | None = None) -> Callable[[int, np.ndarray, float], None]:
    """
    <summary>
    Builds the relaxer's checkpoint callback. Each checkpoint is a profile CSV (1D) or a binary grid
    (2D) plus a JSON sidecar with grid, nu, beta, step and energy.
    </summary>
    <param name="directory" type="str | PathLike">Where the checkpoints go.</param>
    <param name="grid_1d" type="Grid1D | None">Grid of a 1D run.</param>
    <param name="grid_2d" type="Grid2D | None">Grid of a 2D run.</param>
    <param name="nu" type="float">Thin-film parameter of the run.</param>
    <param name="beta" type="float | None">Wall orientation of a 1D run.</param>
    <param name="residual_of" type="Callable | None">Fills the el_residual column of 1D checkpoints; zeros when omitted.</param>
    """
    if (grid_1d is None) == (grid_2d is None):
        raise ValueError("give exactly one of grid_1d and grid_2d")
    directory = Path(directory)

    def save(step: int, theta: np.ndarray, energy: float) -> None:
        stem = directory / f"checkpoint_{step:07d}"
        if grid_1d is not None:
            field = AngleField1D(grid=grid_1d, theta=theta)
            residual = residual_of(theta) if residual_of is not None else np.zeros_like(theta)
            write_profile_csv(stem.with_suffix(".csv"), field, residual)
            grid = grid_1d.model_dump()
        else:
            write_grid(stem.with_suffix(".grid"), AngleField2D(grid=grid_2d, theta=theta))
            grid = grid_2d.model_dump()
        write_json(stem.with_suffix(".json"), {"grid": grid, "nu": nu, "beta": beta, "step": step, "energy": energy})
        logger.debug("checkpoint at step %d written to %s", step, stem)

    return save
