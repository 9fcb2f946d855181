"""
Measurements on relaxed fields: algebraic tail fits, monotonicity and symmetry of 1D walls,
uniqueness probes, splitting of 180 degree walls, and boundary-vortex detection and state
classification in 2D.
"""
import itertools
import logging
import math
from typing import Sequence

import numpy as np
from scipy import ndimage
from scipy.interpolate import CubicSpline

from ..errors import DomainError, TailFitError
from ..schemas import (
    AngleField1D,
    AngleField2D,
    BoundaryVortex,
    Grid2D,
    InitRecipe,
    MonotonicityReport,
    RelaxConfig,
    SplittingReport,
    StateKind,
    StateLabel,
    TailFitResult,
    UniquenessReport,
    VortexPattern,
    WallProblem,
    WallSegment,
)
from .field import initial_condition, level_crossing, magnetization_of
from .relax import relax_1d

logger = logging.getLogger(__name__)

# --- Thresholds ---
"""
<summary>
Fixed classification and fitting constants. Changing any of them changes the golden labels.
</summary>
"""
TAIL_CORE_FRACTION = 0.2
TAIL_FLOOR = 1e-14
TAIL_SAMPLES_PER_DECADE = 40
TAIL_SLOPE_SPREAD = 0.2
TAIL_MIN_DECADES = 0.5
CROSSOVER_SLOPE = 1.5
CROSSOVER_MIN_SAMPLES = 3
STRICT_STEP = 1e-10
CORE_BAND = (0.05, 0.95)
EASY_AXIS_TOLERANCE = math.pi / 8
CONCENTRATION = 0.8
EDGE_DOMAIN = 0.5
MIN_VORTEX_WINDOW = 4
MIN_SEGMENT_CELLS = 3
CORNER_FRACTION = 0.125


# --- 1D walls ---

def _log_slopes(x: np.ndarray, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = max(8, math.ceil(TAIL_SAMPLES_PER_DECADE * math.log10(x[-1] / x[0])) + 1)
    log_x = np.linspace(math.log10(x[0]), math.log10(x[-1]), n)
    log_theta = np.interp(log_x, np.log10(x), np.log10(theta))
    return log_x, log_theta, np.gradient(log_theta, log_x)


def _stable_window(slopes: np.ndarray) -> tuple[int, int]:
    best = (0, 0)
    for start in range(slopes.size):
        low = high = slopes[start]
        stop = start
        while stop + 1 < slopes.size:
            low, high = min(low, slopes[stop + 1]), max(high, slopes[stop + 1])
            if high - low > TAIL_SLOPE_SPREAD:
                break
            stop += 1
        if stop - start > best[1] - best[0]:
            best = (start, stop)
    return best


def tail_fit(theta: AngleField1D) -> TailFitResult:
    """
    <summary>
    Fits log theta against log x on the right tail. Samples past the core (theta below a fifth of its
    maximum on x > 0) and inside the inner half of the right half-window are resampled uniformly in
    log x; the fit uses the longest stretch on which the local log-log slope stays within +-0.1.
    </summary>
    <param name="theta" type="AngleField1D">A profile decaying to 0 as x grows.</param>
    <returns type="TailFitResult">Slope, intercept (base 10), window, r^2 and the crossover flag.</returns>
    <exception cref="TailFitError">Raised when the stable stretch spans less than half a decade.</exception>
    """
    x, values = theta.grid.x, theta.theta
    right = x > 0
    x, values = x[right], values[right]
    if x.size < 4 or values.max() <= 0:
        raise TailFitError("no positive tail on x > 0")
    past_core = np.nonzero(values <= TAIL_CORE_FRACTION * values.max())[0]
    if past_core.size == 0:
        raise TailFitError("the profile never leaves its core on x > 0")
    keep = (np.arange(x.size) >= past_core[0]) & (x <= x[-1] / 4) & (values > TAIL_FLOOR)
    keep_idx = np.nonzero(keep)[0]
    if keep_idx.size < 4:
        raise TailFitError("fewer than four tail samples between the core and the window edge")
    # contiguous run starting at the core
    stop = keep_idx[0] + np.argmax(np.append(np.diff(keep_idx) != 1, True))
    x_tail, theta_tail = x[keep_idx[0]:stop + 1], values[keep_idx[0]:stop + 1]
    if x_tail.size < 4 or x_tail[-1] <= x_tail[0]:
        raise TailFitError("fewer than four contiguous tail samples")

    log_x, log_theta, slopes = _log_slopes(x_tail, theta_tail)
    lo, hi = _stable_window(slopes)
    decades = log_x[hi] - log_x[lo]
    if decades < TAIL_MIN_DECADES:
        raise TailFitError(f"no stable algebraic window: longest stretch spans {decades:.2f} decades")

    fit_x, fit_theta = log_x[lo:hi + 1], log_theta[lo:hi + 1]
    slope, intercept = np.polyfit(fit_x, fit_theta, 1)
    residual = fit_theta - (slope * fit_x + intercept)
    spread = float(np.sum((fit_theta - fit_theta.mean()) ** 2))
    r_squared = 1.0 if spread == 0 else float(np.clip(1.0 - np.sum(residual ** 2) / spread, 0.0, 1.0))
    crossover = int(np.sum(np.abs(slopes[:lo]) < CROSSOVER_SLOPE)) >= CROSSOVER_MIN_SAMPLES
    logger.debug("tail fit slope=%.4f on [%.3g, %.3g]", slope, 10 ** log_x[lo], 10 ** log_x[hi])
    return TailFitResult(slope=float(slope), intercept=float(intercept),
                         fit_window=(float(10 ** log_x[lo]), float(10 ** log_x[hi])), r_squared=r_squared,
                         crossover_detected=crossover, n_samples=hi - lo + 1)


def monotonicity_report(theta: AngleField1D, alpha_limit: float | None = None,
                        tolerance: float = 0.0) -> MonotonicityReport:
    """
    <summary>
    Largest increase theta_{i+1} - theta_i along the profile. Inside the core band
    [0.05, 0.95] * alpha_limit every step must drop by more than 1e-10.
    </summary>
    <param name="theta" type="AngleField1D">The profile.</param>
    <param name="alpha_limit" type="float | None">Left far-field value; defaults to the profile maximum.</param>
    <param name="tolerance" type="float">Increase still counted as nonincreasing.</param>
    """
    values = theta.theta
    steps = np.diff(values)
    worst = int(np.argmax(steps))
    alpha = float(values.max()) if alpha_limit is None else alpha_limit
    core = (values[:-1] >= CORE_BAND[0] * alpha) & (values[:-1] <= CORE_BAND[1] * alpha)
    return MonotonicityReport(
        is_nonincreasing=bool(steps[worst] <= tolerance),
        max_violation=float(steps[worst]),
        violation_at=float(theta.grid.x[worst] + 0.5 * theta.grid.h),
        strict_in_core=bool(np.all(steps[core] < -STRICT_STEP)),
    )


def symmetry_residual(theta: AngleField1D, alpha_limit: float) -> float:
    """
    <summary>
    sup |theta(x* + d) + theta(x* - d) - alpha_limit| over |d| <= W/4, where x* is the alpha_limit/2
    crossing. The reflected samples come from a cubic spline, so no explicit recentring is needed.
    </summary>
    """
    x = theta.grid.x
    centre = level_crossing(theta, 0.5 * alpha_limit)
    near = np.abs(x - centre) <= theta.grid.window / 4
    mirrored = np.clip(2.0 * centre - x[near], x[0], x[-1])
    spline = CubicSpline(x, theta.theta)
    return float(np.max(np.abs(theta.theta[near] + spline(mirrored) - alpha_limit)))


def uniqueness_probe(problem: WallProblem, inits: Sequence[InitRecipe | AngleField1D],
                     config: RelaxConfig = RelaxConfig()) -> UniquenessReport:
    """
    <summary>
    Relaxes the problem from several starting profiles and reports how far apart the recentred
    minimizers end up, in the sup norm.
    </summary>
    <param name="problem" type="WallProblem">The wall problem.</param>
    <param name="inits" type="list">Recipes or ready-made profiles on problem.grid.</param>
    <param name="config" type="RelaxConfig">Relaxation controls shared by all runs.</param>
    <returns type="UniquenessReport">Largest pairwise distance and each run's outcome.</returns>
    """
    profiles, terminations, steps = [], [], []
    for init in inits:
        start = init if isinstance(init, AngleField1D) else initial_condition(init, problem.grid, problem.alpha_limit)
        relaxed, report = relax_1d(start, problem, config)
        profiles.append(relaxed.theta)
        terminations.append(report.termination)
        steps.append(report.steps_taken)
    distance = max((float(np.max(np.abs(a - b))) for a, b in itertools.combinations(profiles, 2)), default=0.0)
    logger.info("uniqueness probe over %d starts: max distance %.3e", len(profiles), distance)
    return UniquenessReport(max_pairwise_distance=distance, terminations=terminations, steps=steps)


def splitting_report(theta: AngleField1D) -> SplittingReport:
    """
    <summary>
    Geometry of a 180 degree wall as two 90 degree halves. Positions are measured from the pi/2
    crossing.
    </summary>
    <exception cref="DomainError">Raised if the profile misses a level or the pi/3 crossing does not precede the pi/6 one.</exception>
    """
    origin = level_crossing(theta, math.pi / 2)
    at = {level: level_crossing(theta, level) - origin
          for level in (3 * math.pi / 4, math.pi / 4, math.pi / 3, math.pi / 6)}
    a, b = at[math.pi / 3], at[math.pi / 6]
    if not b > a:
        raise DomainError(f"expected the pi/3 crossing before the pi/6 crossing, got a={a:.6g}, b={b:.6g}")
    return SplittingReport(
        x_three_quarter=at[3 * math.pi / 4], x_quarter=at[math.pi / 4],
        separation=at[math.pi / 4] - at[3 * math.pi / 4],
        a=a, b=b, log_interaction=math.log((b + a) / (b - a)),
    )


# --- 2D boundary ---

def _boundary_trace(nx: int, ny: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[str]]:
    """Counterclockwise cell loop from (0, 0) with the cumulative tangent angle of each cell."""
    cells, tangents, edges = [], [], []
    runs = [
        ("bottom", 0.0, [(i, 0) for i in range(nx)]),
        ("right", 0.5 * math.pi, [(nx - 1, j) for j in range(1, ny)]),
        ("top", math.pi, [(i, ny - 1) for i in range(nx - 2, -1, -1)]),
        ("left", 1.5 * math.pi, [(0, j) for j in range(ny - 2, 0, -1)]),
    ]
    for edge, tangent, run in runs:
        cells.extend(run)
        tangents.extend([tangent] * len(run))
        edges.extend([edge] * len(run))
    cells = np.array(cells)
    return cells[:, 0], cells[:, 1], np.array(tangents), edges


def _boundary_phase(theta: AngleField2D) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[str], int]:
    grid = theta.grid
    i, j, tangent, edges = _boundary_trace(grid.nx, grid.ny)
    m1, m2 = magnetization_of(theta.theta[i, j])
    psi = np.arctan2(m2, m1)
    turns = np.angle(np.exp(1j * np.diff(np.append(psi, psi[0]))))
    degree = int(round(float(np.sum(turns)) / (2.0 * math.pi)))
    unwrapped = psi[0] + np.concatenate([[0.0], np.cumsum(turns[:-1])])
    return unwrapped - tangent, i, j, edges, degree


def _vortex_window(grid) -> int:
    return max(MIN_VORTEX_WINDOW, min(grid.nx, grid.ny) // 2)


def boundary_winding(theta: AngleField2D) -> tuple[list[BoundaryVortex], int]:
    """
    <summary>
    Walks the boundary counterclockwise and follows phi = psi - tau, the angle of m relative to the
    local tangent. Cells with phi within pi/4 of a multiple of pi are tangent-aligned; a change of that
    multiple between two aligned cells at most one window apart gives one boundary vortex per unit
    change, turning by pi and placed where phi crosses the half-multiple in between. The loop is closed by revisiting the first aligned cell shifted by
    2 pi (degree - 1).
    </summary>
    <param name="theta" type="AngleField2D">The field.</param>
    <returns type="tuple[list[BoundaryVortex], int]">The vortices and the boundary degree of m.</returns>
    """
    grid = theta.grid
    phi, ci, cj, edges, degree = _boundary_phase(theta)
    n = phi.size
    multiple = np.round(phi / math.pi)
    aligned = np.nonzero(np.abs(phi - multiple * math.pi) <= math.pi / 4)[0]
    if aligned.size == 0:
        return [], degree

    closing = phi[aligned[0]] + 2.0 * math.pi * (degree - 1)
    anchors = list(zip(aligned.tolist(), multiple[aligned].tolist()))
    anchors.append((int(aligned[0]) + n, float(round(closing / math.pi))))
    extended = np.concatenate([phi, phi + 2.0 * math.pi * (degree - 1)])
    window = _vortex_window(grid)
    x, y = grid.x, grid.y

    vortices = []
    for (start, k_start), (stop, k_stop) in zip(anchors, anchors[1:]):
        if k_stop == k_start or stop - start > window:
            continue
        sense = 1.0 if k_stop > k_start else -1.0
        for step in range(int(abs(k_stop - k_start))):
            level = (k_start + sense * (step + 0.5)) * math.pi
            arc = float(stop)
            for a in range(start, stop):
                lo, hi = extended[a] - level, extended[a + 1] - level
                if lo == 0 or lo * hi < 0:
                    arc = a + (lo / (lo - hi) if lo != hi else 0.0)
                    break
            base = int(math.floor(arc)) % n
            following = (base + 1) % n
            weight = arc - math.floor(arc)
            position = ((1 - weight) * x[ci[base]] + weight * x[ci[following]],
                        (1 - weight) * y[cj[base]] + weight * y[cj[following]])
            rotation = sense * math.pi
            vortices.append(BoundaryVortex(edge=edges[base], position=(float(position[0]), float(position[1])),
                                           arc_index=arc % n, rotation=rotation, winding=rotation / (2.0 * math.pi),
                                           span=stop - start))
    logger.debug("boundary scan: degree %d, %d vortices", degree, len(vortices))
    return vortices, degree


def boundary_vortex_scan(theta: AngleField2D) -> list[BoundaryVortex]:
    return boundary_winding(theta)[0]


# --- 2D bulk ---

def wall_skeleton(theta: AngleField2D) -> list[WallSegment]:
    """
    <summary>
    Cells where theta crosses an odd multiple of pi/4 towards a neighbour, grouped into connected
    segments per level. Orientation is the principal axis of each segment's cell centres.
    </summary>
    """
    grid = theta.grid
    values = theta.theta
    x, y = np.meshgrid(grid.x, grid.y, indexing="ij")
    first = math.ceil((values.min() / (math.pi / 4) - 1) / 2)
    last = math.floor((values.max() / (math.pi / 4) - 1) / 2)
    segments = []
    for k in range(first, last + 1):
        level = (2 * k + 1) * math.pi / 4
        side = values > level
        mask = np.zeros_like(side)
        mask[:-1, :] |= side[:-1, :] != side[1:, :]
        mask[:, :-1] |= side[:, :-1] != side[:, 1:]
        labels, count = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
        for label in range(1, count + 1):
            members = labels == label
            n_cells = int(members.sum())
            if n_cells < MIN_SEGMENT_CELLS:
                continue
            points = np.stack([x[members], y[members]])
            eigenvalues, eigenvectors = np.linalg.eigh(np.cov(points))
            axis = eigenvectors[:, np.argmax(eigenvalues)]
            orientation = math.degrees(math.atan2(axis[1], axis[0])) % 180.0
            segments.append(WallSegment(level=level, n_cells=n_cells,
                                        centroid=(float(points[0].mean()), float(points[1].mean())),
                                        orientation_deg=orientation))
    return segments


def _easy_direction_bins(psi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    quarter = np.round(psi / (math.pi / 2))
    near = np.abs(psi - quarter * math.pi / 2) <= EASY_AXIS_TOLERANCE
    return np.mod(quarter, 4).astype(int), near


def _edge_corners(edge: str, grid: Grid2D) -> list[tuple[float, float]]:
    return {"bottom": [(0.0, 0.0), (grid.lx, 0.0)], "top": [(0.0, grid.ly), (grid.lx, grid.ly)],
            "left": [(0.0, 0.0), (0.0, grid.ly)], "right": [(grid.lx, 0.0), (grid.lx, grid.ly)]}[edge]


def _vortex_pattern(vortices: Sequence[BoundaryVortex], edge: str, grid: Grid2D) -> VortexPattern:
    """
    <summary>
    Arrangement of the boundary vortices along the open edge of a half-Landau state. A vortex within
    CORNER_FRACTION of the edge length from a corner of that edge is a corner vortex; two same-sense
    vortices away from the corners and within a quarter of the edge length of each other are a
    bound pair.
    </summary>
    """
    corners = _edge_corners(edge, grid)
    edge_length = grid.lx if edge in ("bottom", "top") else grid.ly
    reach = CORNER_FRACTION * edge_length
    at_corner = [min(math.dist(v.position, c) for c in corners) <= reach for v in vortices]
    inner = [v for v, cornered in zip(vortices, at_corner) if not cornered]
    for first, second in itertools.combinations(inner, 2):
        if first.rotation == second.rotation and math.dist(first.position, second.position) <= edge_length / 4:
            return "bound_pair"
    covered = {min(range(2), key=lambda c: math.dist(v.position, corners[c]))
               for v, cornered in zip(vortices, at_corner) if cornered}
    return "corners" if covered == {0, 1} and not inner else "mixed"


def classify_state_2d(theta: AngleField2D) -> StateLabel:
    """
    <summary>
    Feature-based label of a remanent state. The core is the part of the sample more than a quarter
    of the long side away from both short edges; its magnetization is binned by the nearest easy
    direction. Short-edge domains are read from the mean short-axis component along each short edge,
    boundary vortices from the tangent-relative boundary trace, and 90 degree walls from the
    skeleton. A half-Landau label also says how the vortices sit on the open edge (corners or a
    bound pair) and which way that edge is magnetized. Anything that matches no pattern cleanly is
    Unclassified.
    </summary>
    <param name="theta" type="AngleField2D">A relaxed field.</param>
    <returns type="StateLabel">The label and the features behind it.</returns>
    """
    grid = theta.grid
    tall = grid.ly >= grid.lx
    m1, m2 = magnetization_of(theta.theta)
    psi = np.arctan2(m2, m1)
    x, y = np.meshgrid(grid.x, grid.y, indexing="ij")
    along, across = (y, x) if tall else (x, y)
    length, width = (grid.ly, grid.lx) if tall else (grid.lx, grid.ly)
    m_long, m_short = (m2, m1) if tall else (m1, m2)

    core = (along > length / 4) & (along < 3 * length / 4)
    bins, near = _easy_direction_bins(psi[core])
    fractions = np.array([np.mean(near & (bins == b)) for b in range(4)])
    dominant = int(np.argmax(fractions))
    concentration = float(fractions[dominant])

    edge_rows = {"bottom": (slice(None), 0), "right": (-1, slice(None)), "top": (slice(None), -1), "left": (0, slice(None))}
    edge_angles = {name: math.degrees(math.atan2(float(m2[rows].mean()), float(m1[rows].mean())))
                   for name, rows in edge_rows.items()}
    low_edge, high_edge = ("bottom", "top") if tall else ("left", "right")
    short_components = {name: float(m_short[edge_rows[name]].mean()) for name in (low_edge, high_edge)}
    edge_domains = {name: abs(value) >= EDGE_DOMAIN for name, value in short_components.items()}

    vortices, degree = boundary_winding(theta)
    segments = wall_skeleton(theta)
    features = dict(degree=degree, concentration=concentration, dominant_direction_deg=90.0 * dominant,
                    edge_angles_deg=edge_angles, short_edge_components=short_components,
                    vortices=vortices, wall_segments=segments)

    long_axis_bins = (1, 3) if tall else (0, 2)
    if concentration >= CONCENTRATION and not any(edge_domains.values()) and not vortices:
        return StateLabel(kind=StateKind.MONODOMAIN, **features)
    if concentration >= CONCENTRATION and dominant in long_axis_bins and all(edge_domains.values()):
        same = math.copysign(1.0, short_components[low_edge]) == math.copysign(1.0, short_components[high_edge])
        return StateLabel(kind=StateKind.S if same else StateKind.C, **features)

    halves = [core & (across < width / 2), core & (across >= width / 2)]
    half_means = [float(m_long[h].mean()) if h.any() else 0.0 for h in halves]
    antiparallel = half_means[0] * half_means[1] < 0 and min(abs(v) for v in half_means) >= EDGE_DOMAIN
    levels = {round(s.level, 12) for s in segments}
    coordinate = 1 if tall else 0
    for closure, vortex_edge, near_edge in ((high_edge, low_edge, lambda c: c <= length / 4),
                                            (low_edge, high_edge, lambda c: c >= 3 * length / 4)):
        close_vortices = [v for v in vortices if near_edge(v.position[coordinate])]
        if antiparallel and edge_domains[closure] and len(levels) >= 2 and len(close_vortices) >= 2:
            return StateLabel(kind=StateKind.HALF_LANDAU, vortex_pattern=_vortex_pattern(close_vortices, vortex_edge, grid),
                              open_edge=vortex_edge, open_edge_angle_deg=edge_angles[vortex_edge], **features)

    if concentration < CONCENTRATION and float(fractions.sum()) >= CONCENTRATION and segments:
        return StateLabel(kind=StateKind.SPLIT_WALLS, **features)
    logger.info("state left unclassified (concentration %.2f, %d vortices, %d wall segments)",
                concentration, len(vortices), len(segments))
    return StateLabel(kind=StateKind.UNCLASSIFIED, **features)
