"""
Nonlocal operators: the 1D half-Laplacian (spectral, and a lattice quadrature used as an
oracle), the H^{1/2} seminorm, and the thin-film stray field in 2D.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft
from scipy.special import polygamma

from ..errors import PreconditionError
from ..schemas import Grid1D, Grid2D

logger = logging.getLogger(__name__)

# Centred sixth-order stencils, offsets -3..3.
SECOND_DERIVATIVE_6 = np.array([1 / 90, -3 / 20, 3 / 2, -49 / 18, 3 / 2, -3 / 20, 1 / 90])
QUADRATURE_CHUNK = 512
# Average of 1/|r| over a unit square centred at the origin.
SELF_CELL_AVERAGE = 4.0 * math.log(1.0 + math.sqrt(2.0))


# --- 1D spectral half-Laplacian ---

@dataclass(frozen=True, eq=False)
class SpectralPlan1D:
    """
    <summary>
    Wavenumbers k_j = 2*pi*j/W of a Grid1D in real-FFT layout, with the symbol |k| and the
    Parseval weights of the half spectrum.
    </summary>
    """
    grid: Grid1D
    boundary_tolerance: float = 1e-6
    wavenumbers: np.ndarray = field(init=False, repr=False)
    symbol: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = self.grid.n_points
        k = 2.0 * math.pi * fft.rfftfreq(n, d=self.grid.h)
        weights = np.full(k.size, 2.0)
        weights[0] = 1.0
        if n % 2 == 0:
            weights[-1] = 1.0
        for name, value in (("wavenumbers", k), ("symbol", np.abs(k)), ("weights", weights)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    def check(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape != (self.grid.n_points,):
            raise PreconditionError(f"operand has shape {u.shape}, plan expects ({self.grid.n_points},)")
        check_far_field(u, self.boundary_tolerance)
        return u


def check_far_field(u: np.ndarray, tolerance: float) -> None:
    """
    <summary>
    Periodic treatment is only valid when the operand has equal values at both window ends.
    </summary>
    <exception cref="PreconditionError">Raised when |u[0] - u[-1]| exceeds the tolerance.</exception>
    """
    mismatch = abs(u[0] - u[-1])
    if mismatch > tolerance:
        raise PreconditionError(f"far-field mismatch {mismatch:.3e} exceeds tolerance {tolerance:.1e}; "
                                "the operand must have equal limits at both window ends")


def half_laplacian_spectral(u: np.ndarray, plan: SpectralPlan1D) -> np.ndarray:
    """
    <summary>
    Applies (-d^2/dx^2)^{1/2} as multiplication by |k| in Fourier space.
    </summary>
    <param name="u" type="np.ndarray">Samples on the plan's grid.</param>
    <param name="plan" type="SpectralPlan1D">Transform plan.</param>
    <returns type="np.ndarray">The half-Laplacian of u; constants map to zero.</returns>
    <exception cref="PreconditionError">Raised on far-field mismatch or shape mismatch.</exception>
    """
    u = plan.check(u)
    return fft.irfft(plan.symbol * fft.rfft(u), n=u.size)


def h_half_seminorm_sq(u: np.ndarray, plan: SpectralPlan1D) -> float:
    """
    <summary>
    Spectral seminorm int u (-d^2/dx^2)^{1/2} u dx = (h/n) sum_j |k_j| |u_hat_j|^2.
    </summary>
    """
    u = plan.check(u)
    u_hat = fft.rfft(u)
    return float(plan.grid.h / u.size * np.sum(plan.weights * plan.symbol * np.abs(u_hat) ** 2))


def spectral_derivative(u: np.ndarray, plan: SpectralPlan1D) -> np.ndarray:
    u = plan.check(u)
    return fft.irfft(1j * plan.wavenumbers * fft.rfft(u), n=u.size)


# --- 1D lattice quadrature ---

def lattice_tails(n: int) -> np.ndarray:
    """T_i = sum over lattice points j outside [0, n) of 1/(i-j)^2, via the trigamma function."""
    i = np.arange(n)
    return polygamma(1, i + 1.0) + polygamma(1, n - i + 0.0)


def _far_field(u: np.ndarray, far_field: float | None, tolerance: float | None) -> float:
    if far_field is not None:
        return float(far_field)
    if tolerance is not None:
        check_far_field(u, tolerance)
    return 0.5 * (u[0] + u[-1])


def _inverse_square_apply(w: np.ndarray, chunk: int = QUADRATURE_CHUNK) -> np.ndarray:
    n = w.size
    idx = np.arange(n)
    out = np.empty(n)
    for start in range(0, n, chunk):
        offsets = (idx[start:start + chunk, None] - idx[None, :]).astype(float)
        kernel = np.divide(1.0, offsets ** 2, out=np.zeros_like(offsets), where=offsets != 0)
        out[start:start + chunk] = kernel @ w
    return out


def _second_difference_6(w: np.ndarray) -> np.ndarray:
    """Sixth-order centred second difference (without the 1/h^2) of w extended by zero."""
    return np.convolve(np.pad(w, 3), SECOND_DERIVATIVE_6, mode="valid")


def half_laplacian_quadrature(u: np.ndarray, grid: Grid1D, boundary_tolerance: float = 1e-6,
                              far_field: float | None = None) -> np.ndarray:
    """
    <summary>
    Principal-value quadrature of (1/pi) int (u(x) - u(y)) / (x - y)^2 dy. The exterior of the window
    is held at the far-field constant c and summed exactly with trigamma tails; the cell containing
    x contributes -u''(x) h / (2 pi). O(n^2) work, intended as an oracle.
    </summary>
    <param name="u" type="np.ndarray">Samples on `grid`.</param>
    <param name="grid" type="Grid1D">The grid.</param>
    <param name="boundary_tolerance" type="float">Allowed mismatch of the two end values.</param>
    <param name="far_field" type="float | None">Exterior value; defaults to the mean of the end values.</param>
    <returns type="np.ndarray">The half-Laplacian of u.</returns>
    """
    u = np.asarray(u, dtype=float)
    w = u - _far_field(u, far_field, boundary_tolerance)
    bracket = (math.pi ** 2 / 3.0) * w - _inverse_square_apply(w) - 0.5 * _second_difference_6(w)
    return bracket / (math.pi * grid.h)


def h_half_seminorm_sq_quadrature(u: np.ndarray, grid: Grid1D, *, lattice_only: bool = False,
                                  boundary_tolerance: float | None = 1e-6,
                                  far_field: float | None = None) -> float:
    """
    <summary>
    Double-sum form (1/2pi) sum_{i != j} (u_i - u_j)^2 / (i - j)^2, plus the pairs with one point
    outside the window (exterior held at the far-field constant). Unless `lattice_only` is set,
    the diagonal contribution h^2 sum u'^2 is added for accuracy against the continuum. The
    lattice-only form is the one for which contraction and rearrangement inequalities hold
    exactly.
    </summary>
    <param name="u" type="np.ndarray">Samples on `grid`.</param>
    <param name="grid" type="Grid1D">The grid.</param>
    <param name="lattice_only" type="bool">Omit the diagonal correction.</param>
    <param name="boundary_tolerance" type="float | None">Allowed mismatch of end values; None skips the check.</param>
    <param name="far_field" type="float | None">Exterior value; defaults to the mean of the end values.</param>
    <returns type="float">The seminorm squared (independent of h for the lattice part).</returns>
    """
    u = np.asarray(u, dtype=float)
    w = u - _far_field(u, far_field, boundary_tolerance)
    n = w.size
    idx = np.arange(n)
    pairs = 0.0
    for start in range(0, n, QUADRATURE_CHUNK):
        rows = idx[start:start + QUADRATURE_CHUNK]
        offsets = (rows[:, None] - idx[None, :]).astype(float)
        kernel = np.divide(1.0, offsets ** 2, out=np.zeros_like(offsets), where=offsets != 0)
        pairs += float(np.sum((w[rows, None] - w[None, :]) ** 2 * kernel))
    total = pairs + 2.0 * float(np.sum(w ** 2 * lattice_tails(n)))
    if not lattice_only:
        total -= float(np.dot(w, _second_difference_6(w)))
    return total / (2.0 * math.pi)


# --- 2D stray field ---

@dataclass(frozen=True, eq=False)
class StrayFieldPlan2D:
    """
    <summary>
    Free-space Coulomb kernel 1/|r| sampled on the charge grid (the sample plus a one-cell rim)
    and zero-padded to at least twice its size, so that the FFT product is a linear, not
    circular, convolution. The r = 0 entry is the exact cell average of 1/|r|.
    </summary>
    <param name="grid" type="Grid2D">Sample grid.</param>
    """
    grid: Grid2D
    padded_shape: tuple[int, int] = field(init=False)
    kernel_hat: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        charge_shape = (self.grid.nx + 2, self.grid.ny + 2)
        padded = tuple(fft.next_fast_len(2 * size, real=True) for size in charge_shape)
        offsets = [np.minimum(np.arange(size), size - np.arange(size)) for size in padded]
        distance = np.hypot(offsets[0][:, None], offsets[1][None, :])
        kernel = np.divide(1.0, distance * self.grid.h, out=np.zeros(padded), where=distance > 0)
        kernel[0, 0] = SELF_CELL_AVERAGE / self.grid.h
        kernel_hat = fft.rfft2(kernel)
        kernel_hat.setflags(write=False)
        object.__setattr__(self, "padded_shape", padded)
        object.__setattr__(self, "kernel_hat", kernel_hat)

    @property
    def charge_shape(self) -> tuple[int, int]:
        return (self.grid.nx + 2, self.grid.ny + 2)

    def check(self, grid: Grid2D) -> None:
        if grid != self.grid:
            raise PreconditionError(f"stray-field plan built for {self.grid.nx}x{self.grid.ny} (h={self.grid.h}), "
                                    f"field lives on {grid.nx}x{grid.ny} (h={grid.h})")


def _as_vector_field(m, grid: Grid2D) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.shape != (2, grid.nx, grid.ny):
        raise PreconditionError(f"vector field has shape {m.shape}, expected (2, {grid.nx}, {grid.ny})")
    return m


def charge_density_2d(m, grid: Grid2D) -> np.ndarray:
    """
    <summary>
    rho = -div m of the zero-extended field, with centred differences, on the (nx+2, ny+2) charge
    grid whose index (a, b) is cell (a-1, b-1). The rim cells carry the edge-charge layer and the
    total charge telescopes to zero.
    </summary>
    <param name="m" type="array (2, nx, ny)">Magnetization components.</param>
    <param name="grid" type="Grid2D">Sample grid.</param>
    <returns type="np.ndarray">Charge density on the charge grid.</returns>
    """
    m = _as_vector_field(m, grid)
    m1 = np.pad(m[0], 2)
    m2 = np.pad(m[1], 2)
    divergence = (m1[2:, 1:-1] - m1[:-2, 1:-1]) + (m2[1:-1, 2:] - m2[1:-1, :-2])
    return -divergence / (2.0 * grid.h)


def stray_potential(rho: np.ndarray, plan: StrayFieldPlan2D) -> np.ndarray:
    """phi = h^2 sum_q K(p - q) rho_q on the charge grid."""
    rho = np.asarray(rho, dtype=float)
    if rho.shape != plan.charge_shape:
        raise PreconditionError(f"charge density has shape {rho.shape}, plan expects {plan.charge_shape}")
    product = fft.irfft2(fft.rfft2(rho, s=plan.padded_shape) * plan.kernel_hat, s=plan.padded_shape)
    return plan.grid.h ** 2 * product[:rho.shape[0], :rho.shape[1]]


def field_from_charge(rho: np.ndarray, plan: StrayFieldPlan2D, nu: float) -> np.ndarray:
    """
    <summary>
    h = -(nu / 4 pi) grad phi on the sample cells, with the centred gradient that is the exact
    adjoint of the divergence used for rho.
    </summary>
    """
    phi = stray_potential(rho, plan)
    scale = -nu / (4.0 * math.pi * 2.0 * plan.grid.h)
    h1 = scale * (phi[2:, 1:-1] - phi[:-2, 1:-1])
    h2 = scale * (phi[1:-1, 2:] - phi[1:-1, :-2])
    return np.stack([h1, h2])


def stray_field_2d(m, plan: StrayFieldPlan2D, nu: float, grid: Grid2D | None = None) -> np.ndarray:
    """
    <summary>
    Thin-film stray field of m: the negative variational derivative of
    (nu / 8 pi) int int rho(r) rho(r') / |r - r'|.
    </summary>
    <param name="m" type="array (2, nx, ny)">Magnetization components.</param>
    <param name="plan" type="StrayFieldPlan2D">Kernel plan.</param>
    <param name="nu" type="float">Thin-film parameter.</param>
    <param name="grid" type="Grid2D | None">Grid of m; checked against the plan when given.</param>
    <returns type="np.ndarray">Field components, shape (2, nx, ny).</returns>
    <exception cref="PreconditionError">Raised on plan/grid mismatch.</exception>
    """
    if grid is not None:
        plan.check(grid)
    return field_from_charge(charge_density_2d(m, plan.grid), plan, nu)


def stray_energy_2d(m, plan: StrayFieldPlan2D, nu: float) -> float:
    """(nu / 8 pi) h^2 sum rho phi; nonnegative because the sampled kernel is positive definite."""
    rho = charge_density_2d(m, plan.grid)
    phi = stray_potential(rho, plan)
    return float(nu / (8.0 * math.pi) * plan.grid.h ** 2 * np.sum(rho * phi))
