import math
import re
from enum import Enum
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator, model_validator

# --- Wall classes ---
"""
<summary>
The two admissible classes and their charge-free wall orientations. A 90 degree wall connects
theta = pi/2 (left) to 0 (right) and must be oriented at beta = -pi/4; a 180 degree wall connects
pi to 0 at beta = 0. Any other orientation carries a net magnetic charge across the wall.
</summary>
"""
ALPHA_LIMITS = {90: math.pi / 2, 180: math.pi}
CHARGE_FREE_BETA = {90: -math.pi / 4, 180: 0.0}
ANGLE_ATOL = 1e-12


def wall_of(alpha_limit: float) -> int:
    """
    <summary>
    Maps a boundary limit onto its wall class.
    </summary>
    <param name="alpha_limit" type="float">The far-field angle on the left, pi/2 or pi.</param>
    <returns type="int">90 or 180.</returns>
    <exception cref="ValueError">Raised if alpha_limit is neither pi/2 nor pi.</exception>
    """
    for wall, alpha in ALPHA_LIMITS.items():
        if abs(alpha_limit - alpha) <= ANGLE_ATOL:
            return wall
    raise ValueError(f"alpha_limit must be pi/2 or pi, got {alpha_limit!r}")


def charge_free_message(wall: int, beta: float) -> str:
    expected = "-pi/4" if wall == 90 else "0"
    return (f"a {wall} degree wall must be oriented at beta = {expected}, the charge-free orientation "
            f"with equal far-field values of sin(theta - beta); got beta = {beta!r}")


# --- Grids and fields ---

class Grid1D(BaseModel):
    """
    <summary>
    Uniform 1D grid x_i = x0 + i*h, i = 0..n_points-1, in units of the Bloch width.
    </summary>
    <param name="n_points" type="int">Number of samples, a power of two and at least 8.</param>
    <param name="h" type="float">Grid spacing.</param>
    <param name="x0" type="float">Position of the first sample.</param>
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_points: int = Field(ge=8)
    h: float = Field(gt=0)
    x0: float

    @field_validator("n_points")
    @classmethod
    def _power_of_two(cls, value: int) -> int:
        if value & (value - 1):
            raise ValueError(f"n_points must be a power of two, got {value}")
        return value

    @classmethod
    def symmetric(cls, n_points: int, window: float) -> "Grid1D":
        """Grid of total width `window` whose samples are mirror images about x = 0."""
        h = window / n_points
        return cls(n_points=n_points, h=h, x0=-(n_points - 1) * h / 2)

    @property
    def window(self) -> float:
        return self.n_points * self.h

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.h * np.arange(self.n_points)


class Grid2D(BaseModel):
    """
    <summary>
    Cell-centred grid on the rectangle [0, L_x] x [0, L_y]; cell (i, j) sits at ((i+1/2)h, (j+1/2)h).
    </summary>
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    nx: int = Field(ge=2)
    ny: int = Field(ge=2)
    h: float = Field(gt=0)

    @property
    def lx(self) -> float:
        return self.nx * self.h

    @property
    def ly(self) -> float:
        return self.ny * self.h

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.nx) + 0.5) * self.h

    @property
    def y(self) -> np.ndarray:
        return (np.arange(self.ny) + 0.5) * self.h


def _frozen_array(value: Any) -> np.ndarray:
    array = np.array(value, dtype=float)
    array.setflags(write=False)
    return array


class AngleField1D(BaseModel):
    """
    <summary>
    In-plane angle samples on a Grid1D. Angles are stored unwrapped.
    </summary>
    <param name="grid" type="Grid1D">The sampling grid.</param>
    <param name="theta" type="np.ndarray">One finite angle per grid point, in radians.</param>
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: Grid1D
    theta: np.ndarray

    @field_validator("theta", mode="before")
    @classmethod
    def _as_array(cls, value: Any) -> np.ndarray:
        return _frozen_array(value)

    @model_validator(mode="after")
    def _check_samples(self) -> "AngleField1D":
        if self.theta.shape != (self.grid.n_points,):
            raise ValueError(f"theta has shape {self.theta.shape}, grid expects ({self.grid.n_points},)")
        if not np.all(np.isfinite(self.theta)):
            raise ValueError("theta must be finite everywhere")
        return self

    def with_theta(self, theta: np.ndarray) -> "AngleField1D":
        return AngleField1D(grid=self.grid, theta=theta)

    def is_admissible(self, alpha_limit: float, tolerance: float) -> bool:
        """True when the first sample is within `tolerance` of alpha_limit and the last of 0."""
        return abs(self.theta[0] - alpha_limit) <= tolerance and abs(self.theta[-1]) <= tolerance


class AngleField2D(BaseModel):
    """
    <summary>
    In-plane angle theta(x, y) on a Grid2D, stored as an (nx, ny) array indexed [i, j].
    </summary>
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: Grid2D
    theta: np.ndarray

    @field_validator("theta", mode="before")
    @classmethod
    def _as_array(cls, value: Any) -> np.ndarray:
        return _frozen_array(value)

    @model_validator(mode="after")
    def _check_samples(self) -> "AngleField2D":
        if self.theta.shape != self.grid.shape:
            raise ValueError(f"theta has shape {self.theta.shape}, grid expects {self.grid.shape}")
        if not np.all(np.isfinite(self.theta)):
            raise ValueError("theta must be finite everywhere")
        return self

    def with_theta(self, theta: np.ndarray) -> "AngleField2D":
        return AngleField2D(grid=self.grid, theta=theta)


# --- Physical parameters ---

class PhysicalParams(BaseModel):
    """
    <summary>
    Material and film parameters in nanometres. The Bloch width L = l / sqrt(Q) is the length
    unit of every computation and nu = d / (l * sqrt(Q)) is derived, never stored. The defaults
    describe an epitaxial cobalt film, for which nu is numerically close to the thickness in nm.
    </summary>
    <param name="exchange_length_nm" type="float">Exchange length l.</param>
    <param name="quality_factor" type="float">Material quality factor Q.</param>
    <param name="thickness_nm" type="float">Film thickness d.</param>
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    exchange_length_nm: float = Field(default=3.37, gt=0)
    quality_factor: float = Field(default=0.08, gt=0)
    thickness_nm: float = Field(gt=0)

    @property
    def bloch_width_nm(self) -> float:
        return self.exchange_length_nm / math.sqrt(self.quality_factor)

    @property
    def nu(self) -> float:
        return self.thickness_nm / (self.exchange_length_nm * math.sqrt(self.quality_factor))

    def to_units(self, length_nm: float) -> float:
        """Converts a length in nm into Bloch-width units."""
        return length_nm / self.bloch_width_nm


# --- Problems ---

class WallProblem(BaseModel):
    """
    <summary>
    Statement of a 1D wall problem: minimize the wall energy per unit length over profiles with
    theta(-inf) = alpha_limit and theta(+inf) = 0, for a charge-free orientation beta.
    </summary>
    <param name="nu" type="float">Thin-film parameter, nu >= 0.</param>
    <param name="beta" type="float">Wall orientation; -pi/4 for the 90 degree class, 0 for the 180 degree class.</param>
    <param name="alpha_limit" type="float">pi/2 or pi.</param>
    <param name="grid" type="Grid1D">Truncated window on which the profile lives.</param>
    <param name="boundary_tolerance" type="float">Allowed deviation from the far-field values at the window ends.</param>
    <exception cref="ValueError">Raised if beta is not the charge-free orientation of the class.</exception>
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    nu: float = Field(ge=0)
    beta: float
    alpha_limit: float
    grid: Grid1D
    boundary_tolerance: float = Field(default=1e-6, gt=0)

    @model_validator(mode="after")
    def _charge_free(self) -> "WallProblem":
        wall = wall_of(self.alpha_limit)
        if abs(self.beta - CHARGE_FREE_BETA[wall]) > ANGLE_ATOL:
            raise ValueError(charge_free_message(wall, self.beta))
        return self

    @classmethod
    def for_wall(cls, wall: int, nu: float, grid: Grid1D, boundary_tolerance: float = 1e-6) -> "WallProblem":
        return cls(nu=nu, beta=CHARGE_FREE_BETA[wall], alpha_limit=ALPHA_LIMITS[wall], grid=grid,
                   boundary_tolerance=boundary_tolerance)

    @property
    def wall(self) -> int:
        return wall_of(self.alpha_limit)


# --- Initial conditions ---

RecipeKind = Literal["monodomain", "half_split", "half_split_vertical", "bound_pair", "tanh_wall", "two_wall", "step"]
RECIPE_ARITY = {
    "monodomain": 1,
    "half_split": 2,
    "half_split_vertical": 2,
    "bound_pair": 2,
    "tanh_wall": 1,
    "two_wall": 1,
    "step": 0,
}
_ANGLE = re.compile(r"^(?P<sign>[-+])?(?:(?P<coef>\d+(?:\.\d*)?|\.\d+)\*?)?pi(?:/(?P<den>\d+(?:\.\d*)?|\.\d+))?$")
_RECIPE = re.compile(r"^(?P<kind>[a-z_]+)\s*(?:\((?P<args>.*)\))?$")


def parse_angle(token: str) -> float:
    """
    <summary>
    Parses a plain number or a pi expression such as "pi", "-pi/2", "3*pi/4" or "3pi/4".
    </summary>
    <param name="token" type="str">The text to parse.</param>
    <returns type="float">The value in radians.</returns>
    <exception cref="ValueError">Raised for anything else.</exception>
    """
    text = token.replace(" ", "").lower()
    match = _ANGLE.match(text)
    if match:
        value = math.pi * float(match["coef"] or 1.0) / float(match["den"] or 1.0)
        return -value if match["sign"] == "-" else value
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"cannot parse angle {token!r}") from None


def parse_recipe(text: str) -> dict[str, Any]:
    match = _RECIPE.match(text.strip())
    if not match:
        raise ValueError(f"cannot parse initial condition {text!r}")
    raw = (match["args"] or "").strip()
    args = tuple(parse_angle(part) for part in raw.split(",")) if raw else ()
    return {"kind": match["kind"], "args": args}


class InitRecipe(BaseModel):
    """
    <summary>
    An initial-condition recipe. Accepts either {"kind": ..., "args": [...]} or the short text
    form "half_split(pi, 0)".
    </summary>
    <param name="kind" type="str">One of monodomain, half_split, half_split_vertical, bound_pair, tanh_wall, two_wall, step.</param>
    <param name="args" type="tuple[float, ...]">Recipe parameters (angles in radians, lengths in Bloch widths).</param>
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: RecipeKind
    args: tuple[float, ...] = ()

    @model_validator(mode="before")
    @classmethod
    def _from_text(cls, value: Any) -> Any:
        if isinstance(value, str):
            return parse_recipe(value)
        return value

    @model_validator(mode="after")
    def _check_args(self) -> "InitRecipe":
        if len(self.args) != RECIPE_ARITY[self.kind]:
            raise ValueError(f"{self.kind} takes {RECIPE_ARITY[self.kind]} argument(s), got {len(self.args)}")
        if not all(math.isfinite(a) for a in self.args):
            raise ValueError("recipe parameters must be finite")
        if self.kind in ("tanh_wall", "two_wall") and self.args[0] <= 0:
            raise ValueError(f"{self.kind} needs a positive length")
        return self

    def __str__(self) -> str:
        return f"{self.kind}({', '.join(repr(a) for a in self.args)})"


class FilmProblem(BaseModel):
    """
    <summary>
    Statement of a 2D remanence problem on the rectangle [0, lx] x [0, ly].
    </summary>
    <param name="nu" type="float">Thin-film parameter.</param>
    <param name="lx" type="float">Sample width in Bloch widths.</param>
    <param name="ly" type="float">Sample height in Bloch widths.</param>
    <param name="cells_per_unit" type="float">Grid resolution.</param>
    <param name="init" type="InitRecipe">Initial condition.</param>
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    nu: float = Field(ge=0)
    lx: float = Field(gt=0)
    ly: float = Field(gt=0)
    cells_per_unit: float = Field(default=4.0, gt=0)
    init: InitRecipe = InitRecipe(kind="monodomain", args=(0.0,))

    @property
    def grid(self) -> Grid2D:
        return Grid2D(nx=max(2, round(self.lx * self.cells_per_unit)),
                      ny=max(2, round(self.ly * self.cells_per_unit)),
                      h=1.0 / self.cells_per_unit)


# --- Relaxation ---

Stepping = Literal["explicit", "semi_implicit"]
Termination = Literal["converged", "max_steps", "diverged"]


class RelaxConfig(BaseModel):
    """
    <summary>
    Time-stepping and termination controls of the gradient flow.
    </summary>
    <param name="dt" type="float">Initial time step.</param>
    <param name="dt_max" type="float">Upper bound for the adaptive step.</param>
    <param name="dt_min" type="float">Backtracking below this step ends the run as diverged.</param>
    <param name="max_steps" type="int">Accepted-step budget.</param>
    <param name="residual_tol" type="float">Sup-norm of theta_t below which the run may stop.</param>
    <param name="energy_tol" type="float">Per-step energy decrease floor that must also be reached.</param>
    <param name="stepping" type="str">'semi_implicit' (default) or 'explicit'.</param>
    <param name="checkpoint_every" type="int">Steps between checkpoints; 0 disables them.</param>
    <param name="trace_every" type="int">Steps between recorded trace samples.</param>
    <param name="polish" type="bool">Relax again after a 1D profile has been recentred.</param>
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    dt: float = Field(default=1.0, gt=0)
    dt_max: float = Field(default=10.0, gt=0)
    dt_min: float = Field(default=1e-12, gt=0)
    max_steps: int = Field(default=20000, ge=0)
    residual_tol: float = Field(default=1e-8, gt=0)
    energy_tol: float = Field(default=1e-12, gt=0)
    stepping: Stepping = "semi_implicit"
    checkpoint_every: int = Field(default=0, ge=0)
    trace_every: int = Field(default=10, ge=1)
    polish: bool = True


class RelaxReport(BaseModel):
    """
    <summary>
    Convergence record of one relaxation.
    </summary>
    <param name="steps_taken" type="int">Accepted steps.</param>
    <param name="rejected_steps" type="int">Steps undone by backtracking.</param>
    <param name="final_residual" type="float">Sup-norm of the residual of the returned field.</param>
    <param name="final_energy" type="float">Energy of the returned field.</param>
    <param name="energy_trace" type="list[float]">Energy sampled every trace_every steps.</param>
    <param name="residual_trace" type="list[float]">Residual sampled alongside the energy.</param>
    <param name="trace_steps" type="list[int]">Step index of each trace sample.</param>
    <param name="dt_trace" type="list[float]">Time step in use at each trace sample.</param>
    <param name="termination" type="str">converged, max_steps or diverged.</param>
    <param name="wall_clock" type="float">Seconds spent.</param>
    <param name="lyapunov_violations" type="int">Energy trace samples that rose by more than 1e-10 |E| over the previous sample.</param>
    """
    steps_taken: int
    rejected_steps: int = 0
    final_residual: float
    final_energy: float
    energy_trace: list[float]
    residual_trace: list[float]
    trace_steps: list[int]
    dt_trace: list[float]
    termination: Termination
    wall_clock: float
    lyapunov_violations: int = 0

    @property
    def converged(self) -> bool:
        return self.termination == "converged"


class StartRecord(BaseModel):
    """One start of a multi-start film relaxation."""
    init: str
    final_energy: float
    termination: Termination
    steps: int
    kept: bool


# --- Energies and inequality reports ---

class EnergyBreakdown(BaseModel):
    """
    <summary>
    The three energy contributions; total is their sum.
    </summary>
    """
    model_config = ConfigDict(frozen=True)

    exchange: float = Field(ge=0)
    anisotropy: float = Field(ge=0)
    magnetostatic: float = Field(ge=0)

    @computed_field
    @property
    def total(self) -> float:
        return self.exchange + self.anisotropy + self.magnetostatic


class InequalityReport(BaseModel):
    """
    <summary>
    Outcome of one discrete lemma check, stated as lhs <= rhs + tolerance.
    </summary>
    <param name="name" type="str">fold, coercivity or rearrangement.</param>
    <param name="lhs" type="float">Left-hand side.</param>
    <param name="rhs" type="float">Right-hand side.</param>
    <param name="tolerance" type="float">Absolute slack granted for rounding.</param>
    <param name="holds" type="bool">Verdict.</param>
    <param name="components" type="dict[str, float]">Per-term values behind the verdict.</param>
    """
    name: str
    lhs: float
    rhs: float
    tolerance: float
    holds: bool
    components: dict[str, float] = {}

    @property
    def gap(self) -> float:
        return self.rhs - self.lhs


# --- Diagnostics ---

class TailFitResult(BaseModel):
    """
    <summary>
    Least-squares fit of log theta against log x over an automatically chosen window.
    </summary>
    """
    slope: float
    intercept: float
    fit_window: tuple[float, float]
    r_squared: float = Field(ge=0, le=1)
    crossover_detected: bool
    n_samples: int

    @model_validator(mode="after")
    def _window_order(self) -> "TailFitResult":
        lo, hi = self.fit_window
        if not hi > lo > 0:
            raise ValueError(f"fit window must satisfy x_hi > x_lo > 0, got {self.fit_window}")
        return self


class MonotonicityReport(BaseModel):
    is_nonincreasing: bool
    max_violation: float
    violation_at: float
    strict_in_core: bool


class UniquenessReport(BaseModel):
    max_pairwise_distance: float
    terminations: list[Termination]
    steps: list[int]


class SplittingReport(BaseModel):
    """
    <summary>
    Level-crossing geometry of a recentred 180 degree wall. `separation` is the distance between the
    3pi/4 and pi/4 crossings; `a` and `b` are the pi/3 and pi/6 crossings and `log_interaction`
    is ln((b + a) / (b - a)), which grows as the two 90 degree halves approach each other.
    </summary>
    """
    x_three_quarter: float
    x_quarter: float
    separation: float
    a: float
    b: float
    log_interaction: float


class StateKind(str, Enum):
    C = "C"
    S = "S"
    HALF_LANDAU = "HalfLandau"
    MONODOMAIN = "Monodomain"
    SPLIT_WALLS = "SplitWalls"
    UNCLASSIFIED = "Unclassified"


class BoundaryVortex(BaseModel):
    """
    <summary>
    A boundary vortex: a place on the sample edge where the magnetization turns by pi relative to the
    local boundary tangent.
    </summary>
    <param name="edge" type="str">bottom, right, top or left.</param>
    <param name="position" type="tuple[float, float]">Location of the pi/2 crossing, in Bloch widths.</param>
    <param name="arc_index" type="float">Position along the counterclockwise boundary trace, in cells.</param>
    <param name="rotation" type="float">Signed rotation relative to the tangent, +-pi.</param>
    <param name="winding" type="float">rotation / 2pi.</param>
    <param name="span" type="int">Boundary cells between the two tangent-aligned anchors.</param>
    """
    edge: str
    position: tuple[float, float]
    arc_index: float
    rotation: float
    winding: float
    span: int


class WallSegment(BaseModel):
    level: float
    n_cells: int
    centroid: tuple[float, float]
    orientation_deg: float


VortexPattern = Literal["corners", "bound_pair", "mixed"]


class StateLabel(BaseModel):
    """
    <summary>
    A classified 2D remanent state together with the features the label was derived from.
    </summary>
    <param name="vortex_pattern" type="str | None">HalfLandau only: corners when the boundary vortices sit in the corners
    of the open edge, bound_pair when two same-sense vortices sit together away from the corners.</param>
    <param name="open_edge" type="str | None">HalfLandau only: the edge opposite the flux closure.</param>
    <param name="open_edge_angle_deg" type="float | None">Direction of the mean magnetization along the open edge.</param>
    """
    kind: StateKind
    degree: int
    concentration: float
    dominant_direction_deg: float | None = None
    edge_angles_deg: dict[str, float] = {}
    short_edge_components: dict[str, float] = {}
    vortices: list[BoundaryVortex] = []
    wall_segments: list[WallSegment] = []
    vortex_pattern: VortexPattern | None = None
    open_edge: str | None = None
    open_edge_angle_deg: float | None = None


# --- Run configurations ---

class Wall1DConfig(BaseModel):
    """
    <summary>
    Configuration of a `wall1d` run: one relaxation per entry of `nu`.
    </summary>
    <param name="wall" type="int">90 or 180.</param>
    <param name="nu" type="list[float]">Thin-film parameters; a scalar is accepted.</param>
    <param name="beta" type="float | None">Optional explicit orientation; must equal the charge-free value.</param>
    <param name="window" type="float">Window width W.</param>
    <param name="n_points" type="int">Grid size, a power of two.</param>
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    wall: Literal[90, 180]
    nu: list[float]
    beta: float | None = None
    window: float = Field(default=400.0, gt=0)
    n_points: int = Field(default=8192, ge=8)
    boundary_tolerance: float = Field(default=1e-6, gt=0)
    init: InitRecipe = InitRecipe(kind="tanh_wall", args=(3.0,))
    relax: RelaxConfig = RelaxConfig()

    @field_validator("nu", mode="before")
    @classmethod
    def _listify(cls, value: Any) -> Any:
        return [value] if isinstance(value, (int, float)) else value

    @field_validator("nu")
    @classmethod
    def _nonnegative(cls, value: list[float]) -> list[float]:
        if not value or any(v < 0 for v in value):
            raise ValueError("nu must be a non-empty list of non-negative numbers")
        return value

    @model_validator(mode="after")
    def _charge_free(self) -> "Wall1DConfig":
        if self.beta is not None and abs(self.beta - CHARGE_FREE_BETA[self.wall]) > ANGLE_ATOL:
            raise ValueError(charge_free_message(self.wall, self.beta))
        return self

    def grid(self) -> Grid1D:
        return Grid1D.symmetric(self.n_points, self.window)

    def problem(self, nu: float) -> WallProblem:
        return WallProblem.for_wall(self.wall, nu, self.grid(), self.boundary_tolerance)

    def with_resolution(self, cells_per_unit: float) -> "Wall1DConfig":
        n_points = 1 << max(3, math.ceil(math.log2(self.window * cells_per_unit)))
        return self.model_copy(update={"n_points": n_points})


class Film2DConfig(BaseModel):
    """
    <summary>
    Configuration of a `film2d` run. Lengths are given in Bloch widths (lx, ly) or in nm
    (lx_nm, ly_nm, which require a physical block). nu is given directly or derived from the
    physical block; when both are present they must agree. `alternates` lists further initial
    conditions; every start is relaxed and the lowest-energy result is kept.
    </summary>
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    lx: float | None = Field(default=None, gt=0)
    ly: float | None = Field(default=None, gt=0)
    lx_nm: float | None = Field(default=None, gt=0)
    ly_nm: float | None = Field(default=None, gt=0)
    nu: float | None = Field(default=None, ge=0)
    physical: PhysicalParams | None = None
    resolution: float = Field(default=4.0, gt=0)
    init: InitRecipe = InitRecipe(kind="monodomain", args=(0.0,))
    alternates: list[InitRecipe] = []
    relax: RelaxConfig = RelaxConfig(residual_tol=1e-6, energy_tol=1e-10, dt_max=5.0)

    @model_validator(mode="after")
    def _consistent(self) -> "Film2DConfig":
        if self.nu is None and self.physical is None:
            raise ValueError("give either nu or a physical block")
        if self.nu is not None and self.physical is not None and not math.isclose(self.nu, self.physical.nu, rel_tol=1e-9):
            raise ValueError(f"nu = {self.nu} disagrees with the physical block (nu = {self.physical.nu:.6g})")
        for name in ("lx", "ly"):
            given = (getattr(self, name) is not None) + (getattr(self, f"{name}_nm") is not None)
            if given != 1:
                raise ValueError(f"give exactly one of {name} and {name}_nm")
            if getattr(self, f"{name}_nm") is not None and self.physical is None:
                raise ValueError(f"{name}_nm needs a physical block")
        return self

    @property
    def resolved_nu(self) -> float:
        return self.nu if self.nu is not None else self.physical.nu

    def _length(self, name: str) -> float:
        value = getattr(self, name)
        return value if value is not None else self.physical.to_units(getattr(self, f"{name}_nm"))

    def problem(self) -> FilmProblem:
        return FilmProblem(nu=self.resolved_nu, lx=self._length("lx"), ly=self._length("ly"),
                           cells_per_unit=self.resolution, init=self.init)


class SweepConfig(BaseModel):
    """
    <summary>
    Cartesian sweep over nu and sample sizes; every combination becomes one film2d run.
    </summary>
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    nu: list[float]
    sizes: list[tuple[float, float]]
    init: InitRecipe
    alternates: list[InitRecipe] = []
    resolution: float = Field(default=4.0, gt=0)
    relax: RelaxConfig = RelaxConfig(residual_tol=1e-6, energy_tol=1e-10, dt_max=5.0)

    @field_validator("nu", "sizes")
    @classmethod
    def _non_empty(cls, value: list) -> list:
        if not value:
            raise ValueError("sweep axes must not be empty")
        return value

    def runs(self) -> list[Film2DConfig]:
        return [Film2DConfig(lx=lx, ly=ly, nu=nu, resolution=self.resolution, init=self.init,
                             alternates=self.alternates, relax=self.relax)
                for nu in self.nu for lx, ly in self.sizes]


class RunManifest(BaseModel):
    """
    <summary>
    Reproducibility record written next to every run's artifacts. `input_hash` covers the config
    snapshot, the code version, the grids and the seed; timings and outputs are excluded from it.
    </summary>
    """
    command: str
    version: str
    config: dict[str, Any]
    grids: list[dict[str, Any]]
    seed: int | None = None
    input_hash: str
    timings: dict[str, float] = {}
    outputs: dict[str, str] = {}
    validation: dict[str, Any] = {}
