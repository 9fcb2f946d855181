import logging
import math

import numpy as np
from scipy.interpolate import CubicSpline

from ..errors import DomainError
from ..schemas import AngleField1D, AngleField2D, Grid1D, Grid2D, InitRecipe

logger = logging.getLogger(__name__)

HALF_PI = math.pi / 2
RANGE_ATOL = 1e-12


def magnetization_of(theta: AngleField1D | AngleField2D | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    <summary>
    Maps the in-plane angle onto the unit magnetization m = (-sin theta, cos theta).
    </summary>
    <param name="theta" type="AngleField1D | AngleField2D | np.ndarray">Angle samples.</param>
    <returns type="tuple[np.ndarray, np.ndarray]">The components (m1, m2), same shape as theta.</returns>
    """
    values = np.asarray(getattr(theta, "theta", theta), dtype=float)
    return -np.sin(values), np.cos(values)


def fold_values(values: np.ndarray, alpha_limit: float = HALF_PI) -> np.ndarray:
    """Pointwise reflection into [0, alpha_limit] with period 2*alpha_limit."""
    period = 2.0 * alpha_limit
    values = np.asarray(values, dtype=float)
    return np.abs(values - period * np.floor(values / period + 0.5))


def fold_to_quadrant(theta: AngleField1D, alpha_limit: float = HALF_PI) -> AngleField1D:
    """
    <summary>
    Folds a profile into [0, alpha_limit]. For the 90 degree class the map is theta - k*pi on
    [k*pi, (k+1/2)*pi) and k*pi - theta on [(k-1/2)*pi, k*pi); for the 180 degree class the same
    reflection is applied with period 2*pi, so |sin theta| is preserved.
    </summary>
    <param name="theta" type="AngleField1D">Profile to fold.</param>
    <param name="alpha_limit" type="float">pi/2 (default) or pi.</param>
    <returns type="AngleField1D">The folded profile; the map is idempotent and 1-Lipschitz.</returns>
    """
    return theta.with_theta(fold_values(theta.theta, alpha_limit))


def fold_to_octant(theta: AngleField1D, alpha_limit: float = HALF_PI) -> AngleField1D:
    """
    <summary>
    rho = theta where theta < alpha_limit/2, alpha_limit - theta elsewhere.
    </summary>
    <param name="theta" type="AngleField1D">Profile with values in [0, alpha_limit].</param>
    <param name="alpha_limit" type="float">pi/2 or pi.</param>
    <returns type="AngleField1D">rho with values in [0, alpha_limit/2].</returns>
    <exception cref="DomainError">Raised if any value lies outside [0, alpha_limit].</exception>
    """
    values = theta.theta
    if values.min() < -RANGE_ATOL or values.max() > alpha_limit + RANGE_ATOL:
        raise DomainError(f"fold_to_octant needs values in [0, {alpha_limit:.6g}], "
                          f"got [{values.min():.6g}, {values.max():.6g}]")
    rho = np.where(values < alpha_limit / 2, values, alpha_limit - values)
    return theta.with_theta(np.clip(rho, 0.0, alpha_limit / 2))


def pendulum_slots(n: int) -> np.ndarray:
    """Slot order c, c-1, c+1, c-2, c+2, ... for c = n // 2, restricted to [0, n)."""
    centre = n // 2
    slots = [centre]
    for offset in range(1, n):
        for slot in (centre - offset, centre + offset):
            if 0 <= slot < n:
                slots.append(slot)
    return np.array(slots[:n], dtype=int)


def symmetric_decreasing_rearrangement(rho: AngleField1D) -> AngleField1D:
    """
    <summary>
    Discrete symmetric decreasing rearrangement: the largest value goes to index n/2 and the
    remaining values alternate outward, left first. Equal values are interchangeable, so the
    result does not depend on how ties are ordered.
    </summary>
    <param name="rho" type="AngleField1D">Nonnegative profile.</param>
    <returns type="AngleField1D">The rearranged profile; its multiset of values equals the input's.</returns>
    <exception cref="DomainError">Raised if any value is negative.</exception>
    """
    values = rho.theta
    if values.min() < 0:
        raise DomainError(f"rearrangement needs nonnegative values, got minimum {values.min():.6g}")
    out = np.empty_like(values)
    out[pendulum_slots(values.size)] = np.sort(values)[::-1]
    return rho.with_theta(out)


def rearranged_competitor(theta: AngleField1D, alpha_limit: float = HALF_PI) -> AngleField1D:
    """
    <summary>
    Builds the monotone competitor from a profile: fold, reduce to rho, rearrange, and glue
    rho* on the right half with alpha_limit - rho*(-x) on the left half.
    </summary>
    """
    rho = fold_to_octant(fold_to_quadrant(theta, alpha_limit), alpha_limit)
    star = symmetric_decreasing_rearrangement(rho).theta
    n = star.size
    mirror = star[::-1]
    glued = np.where(np.arange(n) >= n // 2, star, alpha_limit - mirror)
    return theta.with_theta(glued)


def level_crossing(theta: AngleField1D, level: float) -> float:
    """
    <summary>
    Position where the profile crosses `level`, taking the crossing closest to x = 0. The bracket
    comes from linear interpolation and is refined on a cubic spline through the samples.
    </summary>
    <param name="theta" type="AngleField1D">Profile, typically decreasing.</param>
    <param name="level" type="float">Angle to locate.</param>
    <returns type="float">The crossing position.</returns>
    <exception cref="DomainError">Raised if the profile never crosses the level.</exception>
    """
    x = theta.grid.x
    shifted = theta.theta - level
    brackets = np.nonzero(np.sign(shifted[:-1]) * np.sign(shifted[1:]) <= 0)[0]
    brackets = brackets[shifted[brackets] != shifted[brackets + 1]]
    if brackets.size == 0:
        raise DomainError(f"profile never crosses theta = {level:.6g}")
    linear = x[brackets] + theta.grid.h * shifted[brackets] / (shifted[brackets] - shifted[brackets + 1])
    guess = linear[np.argmin(np.abs(linear))]
    roots = CubicSpline(x, theta.theta).solve(level, extrapolate=False)
    roots = roots[np.abs(roots - guess) <= theta.grid.h]
    return float(roots[np.argmin(np.abs(roots - guess))]) if roots.size else float(guess)


def _profile_1d(recipe: InitRecipe, x: np.ndarray, alpha_limit: float) -> np.ndarray:
    args = recipe.args
    if recipe.kind == "monodomain":
        return np.full_like(x, args[0])
    if recipe.kind == "half_split":
        return np.where(x < 0, args[0], args[1])
    if recipe.kind in ("half_split_vertical", "bound_pair"):
        raise ValueError(f"{recipe.kind} has no 1D form")
    if recipe.kind == "tanh_wall":
        return 0.5 * alpha_limit * (1.0 - np.tanh(x / args[0]))
    if recipe.kind == "two_wall":
        half = 0.5 * args[0]
        return 0.25 * alpha_limit * (2.0 - np.tanh(x + half) - np.tanh(x - half))
    return np.where(x < 0, alpha_limit, 0.0)


def _bound_pair(x: np.ndarray, y: np.ndarray, grid: Grid2D, left: float, right: float) -> np.ndarray:
    """
    <summary>
    half_split(left, right) with a band along the bottom edge in which each half turns by pi/2 towards
    the other, so that the bottom edge closes the flux the opposite way to the top. Across the middle
    of the band theta changes by 2 pi, which relaxes into a bound pair of boundary vortices.
    </summary>
    """
    band = min(grid.lx, grid.ly) / 4
    turn = 0.5 * math.pi * math.copysign(1.0, left - right) * np.clip(1.0 - y / band, 0.0, 1.0)
    return np.where(x < grid.lx / 2, left + turn, right - turn)


def initial_condition(recipe: InitRecipe, grid: Grid1D | Grid2D, alpha_limit: float = HALF_PI) -> AngleField1D | AngleField2D:
    """
    <summary>
    Deterministic field construction from a recipe. In 1D the wall recipes interpolate from
    alpha_limit to 0 across x = 0; in 2D a wall recipe runs along y through the middle of the sample
    and rotates by pi, and `step` is the same as half_split(pi, 0).
    </summary>
    <param name="recipe" type="InitRecipe">The recipe.</param>
    <param name="grid" type="Grid1D | Grid2D">Target grid.</param>
    <param name="alpha_limit" type="float">Left far-field value of 1D wall recipes.</param>
    <returns type="AngleField1D | AngleField2D">The initial field.</returns>
    """
    if isinstance(grid, Grid1D):
        return AngleField1D(grid=grid, theta=_profile_1d(recipe, grid.x, alpha_limit))

    x, y = np.meshgrid(grid.x, grid.y, indexing="ij")
    args = recipe.args
    if recipe.kind == "monodomain":
        theta = np.full(grid.shape, args[0])
    elif recipe.kind == "half_split":
        theta = np.where(x < grid.lx / 2, args[0], args[1])
    elif recipe.kind == "half_split_vertical":
        theta = np.where(y < grid.ly / 2, args[0], args[1])
    elif recipe.kind == "bound_pair":
        theta = _bound_pair(x, y, grid, args[0], args[1])
    elif recipe.kind == "step":
        theta = np.where(x < grid.lx / 2, math.pi, 0.0)
    else:
        theta = _profile_1d(recipe, x - grid.lx / 2, math.pi)
    logger.debug("initial condition %s on %dx%d", recipe, grid.nx, grid.ny)
    return AngleField2D(grid=grid, theta=theta)


def closed_form_wall(grid: Grid1D) -> AngleField1D:
    """The nu = 0 90 degree minimizer arctan(exp(-x)), with energy exactly 1/2."""
    return AngleField1D(grid=grid, theta=np.arctan(np.exp(-grid.x)))


def random_admissible_profile(rng: np.random.Generator, grid: Grid1D, alpha_limit: float = HALF_PI, *,
                              amplitude: float = 0.5, n_bumps: int = 4) -> AngleField1D:
    """
    <summary>
    A smooth admissible test profile: a tanh wall of random width plus Gaussian bumps placed in the
    middle quarter of the window, with total bump amplitude at most `amplitude`.
    </summary>
    <param name="rng" type="np.random.Generator">Source of randomness.</param>
    <param name="grid" type="Grid1D">Target grid.</param>
    <param name="alpha_limit" type="float">Left far-field value.</param>
    <returns type="AngleField1D">Profile with far-field values exact to rounding.</returns>
    """
    x = grid.x
    width = rng.uniform(1.0, 5.0)
    theta = 0.5 * alpha_limit * (1.0 - np.tanh(x / width))
    weights = rng.uniform(-1.0, 1.0, n_bumps)
    weights *= amplitude / max(np.sum(np.abs(weights)), 1e-300)
    centres = rng.uniform(-grid.window / 8, grid.window / 8, n_bumps)
    widths = rng.uniform(1.0, 5.0, n_bumps)
    for weight, centre, spread in zip(weights, centres, widths):
        theta += weight * np.exp(-((x - centre) / spread) ** 2)
    return AngleField1D(grid=grid, theta=theta)
