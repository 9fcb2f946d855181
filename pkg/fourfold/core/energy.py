import logging
import math
from typing import Literal

import numpy as np
from scipy import fft

from ..errors import PreconditionError
from ..schemas import AngleField1D, AngleField2D, EnergyBreakdown, InequalityReport, WallProblem
from .field import fold_to_octant, fold_to_quadrant, magnetization_of, symmetric_decreasing_rearrangement
from .nonlocal_ops import (
    SpectralPlan1D,
    StrayFieldPlan2D,
    charge_density_2d,
    field_from_charge,
    h_half_seminorm_sq_quadrature,
    stray_potential,
)

logger = logging.getLogger(__name__)

# Cells at each end of a 1D window held at the far-field values.
PINNED_CELLS = 2
EXACT_SLACK = 1e-12
# Negative stray-field energy tolerated as rounding, relative to the total.
ROUNDING_SLACK = 1e-10
ASYMPTOTIC_SLACK = 1e-8

SeminormMethod = Literal["spectral", "quadrature", "lattice"]


# --- 1D ---

def _magnetostatic_breakdown(exchange: float, anisotropy: float, magnetostatic: float) -> EnergyBreakdown:
    """A negative stray-field energy is rounding noise up to ROUNDING_SLACK of the total; beyond that it is logged."""
    if magnetostatic < 0.0:
        scale = abs(exchange) + abs(anisotropy) + abs(magnetostatic)
        if magnetostatic < -ROUNDING_SLACK * scale:
            logger.warning("negative magnetostatic energy %.6e (scale %.6e); the stray-field operator lost positivity",
                           magnetostatic, scale)
        magnetostatic = 0.0
    return EnergyBreakdown(exchange=exchange, anisotropy=anisotropy, magnetostatic=magnetostatic)


def check_admissible(theta: AngleField1D, problem: WallProblem) -> None:
    """
    <summary>
    Enforces the admissible class on the truncated window.
    </summary>
    <exception cref="PreconditionError">Raised if an end value misses its far-field limit.</exception>
    """
    if theta.grid != problem.grid:
        raise PreconditionError("profile and problem live on different grids")
    if not theta.is_admissible(problem.alpha_limit, problem.boundary_tolerance):
        raise PreconditionError(
            f"profile is not admissible: theta(first) = {theta.theta[0]:.3e} should be {problem.alpha_limit:.6g}, "
            f"theta(last) = {theta.theta[-1]:.3e} should be 0 (tolerance {problem.boundary_tolerance:.1e})")


def _local_terms_1d(theta: np.ndarray, h: float) -> tuple[float, float]:
    exchange = 0.5 * float(np.sum(np.diff(theta) ** 2)) / h
    anisotropy = 0.125 * h * float(np.sum(np.sin(2.0 * theta) ** 2))
    return exchange, anisotropy


def _exchange_gradient_1d(theta: np.ndarray, h: float) -> np.ndarray:
    forward = np.diff(theta)
    gradient = np.zeros_like(theta)
    gradient[:-1] -= forward
    gradient[1:] += forward
    return gradient / h ** 2


def _nonlocal_1d(theta: np.ndarray, problem: WallProblem, plan: SpectralPlan1D) -> tuple[float, np.ndarray]:
    """Magnetostatic energy and its L2 gradient from one forward transform."""
    u = plan.check(np.sin(theta - problem.beta))
    u_hat = fft.rfft(u)
    seminorm = plan.grid.h / u.size * float(np.sum(plan.weights * plan.symbol * np.abs(u_hat) ** 2))
    half_laplacian = fft.irfft(plan.symbol * u_hat, n=u.size)
    gradient = 0.5 * problem.nu * np.cos(theta - problem.beta) * half_laplacian
    return 0.25 * problem.nu * seminorm, gradient


def energy_and_residual_1d(theta: np.ndarray, problem: WallProblem, plan: SpectralPlan1D) -> tuple[EnergyBreakdown, np.ndarray]:
    """
    <summary>
    Energy and EL residual of raw samples in one pass, for the time stepper. The residual is zero
    on the pinned cells.
    </summary>
    """
    h = problem.grid.h
    exchange, anisotropy = _local_terms_1d(theta, h)
    residual = _exchange_gradient_1d(theta, h) + 0.25 * np.sin(4.0 * theta)
    magnetostatic = 0.0
    if problem.nu > 0:
        magnetostatic, gradient = _nonlocal_1d(theta, problem, plan)
        residual += gradient
    residual[:PINNED_CELLS] = 0.0
    residual[-PINNED_CELLS:] = 0.0
    breakdown = _magnetostatic_breakdown(exchange, anisotropy, magnetostatic)
    return breakdown, residual


def energy_1d(theta: AngleField1D, problem: WallProblem, *, method: SeminormMethod = "spectral",
              check: bool = True, plan: SpectralPlan1D | None = None) -> EnergyBreakdown:
    """
    <summary>
    Wall energy per unit length: exchange 1/2 int theta'^2 (forward differences), anisotropy
    1/8 int sin^2(2 theta), and magnetostatic (nu/4) |sin(theta - beta)|^2 in H^{1/2}.
    </summary>
    <param name="theta" type="AngleField1D">The profile.</param>
    <param name="problem" type="WallProblem">Problem statement (nu, beta, class, grid).</param>
    <param name="method" type="str">Seminorm realization: 'spectral' (default), 'quadrature' or 'lattice'.</param>
    <param name="check" type="bool">Enforce admissibility; switch off for test fixtures outside the class.</param>
    <param name="plan" type="SpectralPlan1D | None">Reusable transform plan.</param>
    <returns type="EnergyBreakdown">The three contributions.</returns>
    <exception cref="PreconditionError">Raised for non-admissible input or a far-field mismatch.</exception>
    """
    if check:
        check_admissible(theta, problem)
    values = theta.theta
    exchange, anisotropy = _local_terms_1d(values, problem.grid.h)
    magnetostatic = 0.0
    if problem.nu > 0:
        u = np.sin(values - problem.beta)
        if method == "spectral":
            magnetostatic = _nonlocal_1d(values, problem, plan or SpectralPlan1D(problem.grid, problem.boundary_tolerance))[0]
        else:
            magnetostatic = 0.25 * problem.nu * h_half_seminorm_sq_quadrature(
                u, problem.grid, lattice_only=method == "lattice", boundary_tolerance=problem.boundary_tolerance)
    return _magnetostatic_breakdown(exchange, anisotropy, magnetostatic)


def el_residual_1d(theta: AngleField1D, problem: WallProblem, *, check: bool = True,
                   plan: SpectralPlan1D | None = None) -> np.ndarray:
    """
    <summary>
    r = -theta'' + 1/4 sin 4 theta + (nu/2) cos(theta - beta) (-d^2/dx^2)^{1/2} sin(theta - beta), the
    L2 gradient of energy_1d, on interior points (zero on the pinned cells).
    </summary>
    <param name="theta" type="AngleField1D">The profile.</param>
    <param name="problem" type="WallProblem">Problem statement.</param>
    <returns type="np.ndarray">The residual, one value per grid point.</returns>
    """
    if check:
        check_admissible(theta, problem)
    plan = plan or SpectralPlan1D(problem.grid, problem.boundary_tolerance)
    return energy_and_residual_1d(theta.theta, problem, plan)[1]


# --- 2D ---

def neumann_laplacian(theta: np.ndarray, h: float) -> np.ndarray:
    """Graph Laplacian of the cell grid with reflecting (no-flux) boundaries."""
    laplacian = np.zeros_like(theta)
    for axis in (0, 1):
        forward = np.diff(theta, axis=axis)
        head = [slice(None)] * 2
        tail = [slice(None)] * 2
        head[axis] = slice(None, -1)
        tail[axis] = slice(1, None)
        laplacian[tuple(head)] += forward
        laplacian[tuple(tail)] -= forward
    return laplacian / h ** 2


def energy_and_field_2d(theta: np.ndarray, nu: float, plan: StrayFieldPlan2D) -> tuple[EnergyBreakdown, np.ndarray]:
    """
    <summary>
    Energy and effective field -dE/dtheta of raw samples in one pass. The stray field enters the
    angle equation through its component along t = dm/dtheta = (-cos theta, -sin theta).
    </summary>
    """
    h = plan.grid.h
    exchange = 0.5 * float(np.sum(np.diff(theta, axis=0) ** 2) + np.sum(np.diff(theta, axis=1) ** 2))
    anisotropy = 0.125 * h ** 2 * float(np.sum(np.sin(2.0 * theta) ** 2))
    field = neumann_laplacian(theta, h) - 0.25 * np.sin(4.0 * theta)
    magnetostatic = 0.0
    if nu > 0:
        m = np.stack(magnetization_of(theta))
        rho = charge_density_2d(m, plan.grid)
        phi = stray_potential(rho, plan)
        magnetostatic = nu / (8.0 * math.pi) * h ** 2 * float(np.sum(rho * phi))
        stray = field_from_charge(rho, plan, nu)
        field -= np.cos(theta) * stray[0] + np.sin(theta) * stray[1]
    return _magnetostatic_breakdown(exchange, anisotropy, magnetostatic), field


def energy_2d(theta: AngleField2D, nu: float, plan: StrayFieldPlan2D | None = None) -> EnergyBreakdown:
    """
    <summary>
    Reduced thin-film energy 1/2 int |grad theta|^2 + 1/8 int sin^2(2 theta)
    + (nu / 8 pi) int int rho rho' / |r - r'|, with rho = -div m of the zero-extended magnetization.
    </summary>
    <param name="theta" type="AngleField2D">The angle field.</param>
    <param name="nu" type="float">Thin-film parameter.</param>
    <param name="plan" type="StrayFieldPlan2D | None">Kernel plan for the field's grid.</param>
    <returns type="EnergyBreakdown">The three contributions.</returns>
    """
    plan = plan or StrayFieldPlan2D(theta.grid)
    plan.check(theta.grid)
    return energy_and_field_2d(theta.theta, nu, plan)[0]


def effective_field_2d(theta: AngleField2D, nu: float, plan: StrayFieldPlan2D | None = None) -> np.ndarray:
    """
    <summary>
    -dE/dtheta = Laplacian(theta) - 1/4 sin 4 theta + t . h_stray, with the homogeneous Neumann
    condition built into the Laplacian.
    </summary>
    """
    plan = plan or StrayFieldPlan2D(theta.grid)
    plan.check(theta.grid)
    return energy_and_field_2d(theta.theta, nu, plan)[1]


# --- Lemma checks ---

def check_fold_inequality(theta: AngleField1D, problem: WallProblem) -> InequalityReport:
    """
    <summary>
    Compares the energy of the folded profile with the original, both with the lattice seminorm.
    Exchange can only drop (the fold is 1-Lipschitz), anisotropy is unchanged, and the nonlocal
    term drops because the folded operand is a contraction of the original.
    </summary>
    """
    folded = fold_to_quadrant(theta, problem.alpha_limit)
    before = energy_1d(theta, problem, method="lattice")
    after = energy_1d(folded, problem, method="lattice")
    tolerance = EXACT_SLACK * abs(before.total)
    return InequalityReport(
        name="fold", lhs=after.total, rhs=before.total, tolerance=tolerance,
        holds=after.total <= before.total + tolerance,
        components={
            "exchange_before": before.exchange, "exchange_after": after.exchange,
            "anisotropy_before": before.anisotropy, "anisotropy_after": after.anisotropy,
            "magnetostatic_before": before.magnetostatic, "magnetostatic_after": after.magnetostatic,
        })


def _octant_profile(theta: AngleField1D, problem: WallProblem) -> AngleField1D:
    return fold_to_octant(fold_to_quadrant(theta, problem.alpha_limit), problem.alpha_limit)


def check_coercivity(theta: AngleField1D, problem: WallProblem) -> InequalityReport:
    """
    <summary>
    E(rho) >= 1/8 |rho|_2^2 + 1/4 |rho'|_2^2 + (nu/4) |sin(rho + pi/4)|^2 for rho the octant fold of a
    90 degree profile. On [0, pi/4], sin 2 rho >= 4 rho / pi, so the anisotropy term dominates
    1/8 rho^2 pointwise.
    </summary>
    <exception cref="PreconditionError">Raised for the 180 degree class.</exception>
    """
    if problem.wall != 90:
        raise PreconditionError("the coercivity bound is stated for the 90 degree class")
    rho = _octant_profile(theta, problem)
    energy = energy_1d(rho, problem, method="lattice", check=False)
    h = problem.grid.h
    l2 = 0.125 * h * float(np.sum(rho.theta ** 2))
    gradient = 0.25 * float(np.sum(np.diff(rho.theta) ** 2)) / h
    bound = l2 + gradient + energy.magnetostatic
    tolerance = EXACT_SLACK * max(abs(energy.total), 1e-300)
    return InequalityReport(
        name="coercivity", lhs=bound, rhs=energy.total, tolerance=tolerance,
        holds=bound <= energy.total + tolerance,
        components={"l2": l2, "gradient": gradient, "magnetostatic": energy.magnetostatic,
                    "energy_exchange": energy.exchange, "energy_anisotropy": energy.anisotropy})


def _rearrangement_terms(rho: np.ndarray, problem: WallProblem) -> dict[str, float]:
    h = problem.grid.h
    shift = math.pi / 4 if problem.wall == 90 else 0.0
    operand = np.sin(rho + shift)
    magnetostatic = 0.25 * problem.nu * h_half_seminorm_sq_quadrature(
        operand, problem.grid, lattice_only=True, boundary_tolerance=None, far_field=math.sin(shift))
    return {
        "exchange": 0.5 * float(np.sum(np.diff(np.pad(rho, 1)) ** 2)) / h,
        "anisotropy": 0.125 * h * float(np.sum(np.sort(np.sin(2.0 * rho) ** 2))),
        "magnetostatic": magnetostatic,
    }


def check_rearrangement_inequality(theta: AngleField1D, problem: WallProblem) -> InequalityReport:
    """
    <summary>
    Rearranges rho = octant fold of theta and checks each term: anisotropy equal, exchange of the
    zero-extended profile not larger, nonlocal term not larger up to 1e-8 of the total.
    </summary>
    """
    rho = _octant_profile(theta, problem)
    star = symmetric_decreasing_rearrangement(rho)
    before = _rearrangement_terms(rho.theta, problem)
    after = _rearrangement_terms(star.theta, problem)
    total_before = sum(before.values())
    total_after = sum(after.values())
    scale = max(abs(total_before), 1e-300)
    holds = (after["anisotropy"] == before["anisotropy"]
             and after["exchange"] <= before["exchange"] + EXACT_SLACK * scale
             and after["magnetostatic"] <= before["magnetostatic"] + ASYMPTOTIC_SLACK * scale)
    return InequalityReport(
        name="rearrangement", lhs=total_after, rhs=total_before, tolerance=ASYMPTOTIC_SLACK * scale, holds=holds,
        components={f"{key}_{tag}": value for tag, terms in (("before", before), ("after", after))
                    for key, value in terms.items()})
