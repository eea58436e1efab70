"""Phase-space densities, characteristic functions and the Cohen kernel family.

Two constructions are provided side by side:

* rule ``"A"``: the factorized density ``|psi(x)|**2 |phi(p)|**2``, positive
  by construction;
* rule ``"B"``: the Wigner density obtained by inverting the point-split
  characteristic function ``psi*(x - dx/2) psi(x + dx/2)`` over ``dx``.

The Cohen generalized distribution interpolates between them through a kernel
``f(theta, tau)``: ``f = 1`` gives rule B and the ratio kernel built by
:func:`cohen_kernel_factorized` gives rule A.

Array layout: ``density.values[i, j]`` is ``F(x_i, p_j)``; characteristic
functions are indexed ``[x, dx]``; kernels ``[theta, tau]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import AccuracyError, ContractError, DomainError, ParameterError
from .specfun import laguerre
from .states import (
    NATURAL,
    Grid1D,
    MomentumWaveFunction,
    OscillatorParams,
    WaveFunction,
    default_pgrid,
    default_xgrid,
    momentum_transform,
    spectral_derivative,
)

__all__ = [
    "PhaseSpaceDensity",
    "CharacteristicFunction",
    "CharacteristicAmplitude",
    "CohenKernel",
    "density_factorized",
    "density_wigner",
    "density_wigner_closed",
    "characteristic_pointsplit",
    "characteristic_factorized",
    "characteristic_amplitude",
    "contract_amplitude",
    "characteristic_to_density",
    "liouville_residual",
    "ambiguity_function",
    "unity_kernel",
    "cohen_kernel_factorized",
    "cohen_distribution",
    "default_cohen_grids",
    "potential_derivative",
]

DENSITY_NORM_TOL = 1e-6
FOURIER_CONSISTENCY_TOL = 1e-7
WIGNER_TAIL_TOL = 1e-8
DEFAULT_EPSILON = 1e-8
DEFAULT_MIN_COVERAGE = 0.99


@dataclass(frozen=True)
class PhaseSpaceDensity:
    """Real density ``F(x, p)`` sampled on an (x, p) grid.

    ``rule`` is ``"A"``, ``"B"`` or ``"cohen:<kernel id>"``.
    """

    xgrid: Grid1D
    pgrid: Grid1D
    values: np.ndarray
    rule: str
    params: OscillatorParams = NATURAL
    t: float = 0.0

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.xgrid.count, self.pgrid.count):
            raise ParameterError(
                f"density shape {values.shape} does not match grids "
                f"({self.xgrid.count}, {self.pgrid.count})"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def cell(self) -> float:
        return self.xgrid.spacing * self.pgrid.spacing

    def normalization(self) -> float:
        return float(self.values.sum() * self.cell)

    def x_marginal(self) -> np.ndarray:
        return self.values.sum(axis=1) * self.pgrid.spacing

    def p_marginal(self) -> np.ndarray:
        return self.values.sum(axis=0) * self.xgrid.spacing

    def check_normalized(self, tol: float = DENSITY_NORM_TOL) -> "PhaseSpaceDensity":
        norm = self.normalization()
        if abs(norm - 1.0) > tol:
            raise DomainError(
                f"rule {self.rule} density normalizes to {norm:.10g} on the given grids; "
                f"the grids do not cover or resolve its support"
            )
        return self


@dataclass(frozen=True)
class CharacteristicFunction:
    """``Z(x, dx)``, the Fourier dual of a density in ``p``."""

    xgrid: Grid1D
    dxgrid: Grid1D
    values: np.ndarray
    rule: str
    params: OscillatorParams = NATURAL


@dataclass(frozen=True)
class CharacteristicAmplitude:
    """``xi(x', x)``; axis 0 runs over ``x'`` and axis 1 over ``x``."""

    xgrid: Grid1D
    xpgrid: Grid1D
    values: np.ndarray
    params: OscillatorParams = NATURAL


@dataclass(frozen=True)
class CohenKernel:
    """Kernel ``f(theta, tau)`` with a validity mask.

    ``coverage`` is the fraction of the kernel's target (the numerator
    ``f * A`` it is meant to produce) that falls inside the mask, measured in
    the L1 sense over the sampled grid.
    """

    thetagrid: Grid1D
    taugrid: Grid1D
    values: np.ndarray
    mask: np.ndarray
    epsilon: float
    coverage: float
    kernel_id: str

    def __post_init__(self):
        for name in ("values", "mask"):
            arr = np.array(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def mask_fraction(self) -> float:
        return float(self.mask.mean())

    def value_at_origin(self) -> complex:
        i = int(np.argmin(np.abs(self.thetagrid.points)))
        j = int(np.argmin(np.abs(self.taugrid.points)))
        return complex(self.values[i, j])


def _spline(psi: WaveFunction) -> Callable[[np.ndarray], np.ndarray]:
    """Cubic interpolant of ``psi`` that is zero outside the grid."""
    spl = CubicSpline(psi.x, psi.values, extrapolate=False)

    def evaluate(points):
        out = spl(points)
        return np.where(np.isnan(out), 0.0, out)

    return evaluate


def potential_derivative(potential) -> Callable[[np.ndarray], np.ndarray]:
    """``V'(x)`` from a potential object or a plain callable.

    Objects exposing ``derivative`` use it directly; bare callables are
    differentiated by a central difference with step 1e-5.
    """
    deriv = getattr(potential, "derivative", None)
    if deriv is not None:
        return deriv
    step = 1e-5

    def fd(x):
        x = np.asarray(x, dtype=float)
        return (np.asarray(potential(x + step)) - np.asarray(potential(x - step))) / (2 * step)

    return fd


# -- densities ---------------------------------------------------------------

def density_factorized(psi: WaveFunction, phi: MomentumWaveFunction) -> PhaseSpaceDensity:
    """Positive density ``|psi(x)|**2 |phi(p)|**2`` (rule A)."""
    reference = momentum_transform(psi, phi.grid)
    mismatch = float(np.max(np.abs(reference.values - phi.values)))
    if mismatch > FOURIER_CONSISTENCY_TOL:
        raise ContractError(
            f"momentum amplitude is not the Fourier transform of psi (max deviation {mismatch:.3g})"
        )
    values = np.outer(psi.density, phi.density)
    return PhaseSpaceDensity(psi.grid, phi.grid, values, "A", psi.params, psi.t).check_normalized()


def _pointsplit_on_grid(psi: WaveFunction, kmax: int) -> np.ndarray:
    """``Z[i, k] = conj(psi[i-k]) psi[i+k]`` for ``k = 0..kmax`` (zero off-grid)."""
    n = psi.grid.count
    padded = np.concatenate([np.zeros(kmax), psi.values, np.zeros(kmax)])
    i = np.arange(n)[:, None] + kmax
    k = np.arange(kmax + 1)[None, :]
    return np.conj(padded[i - k]) * padded[i + k]


def density_wigner(psi: WaveFunction, pgrid: Optional[Grid1D] = None,
                   window: Optional[float] = None) -> PhaseSpaceDensity:
    """Wigner density (rule B) by direct inversion of the point-split product.

    ``F(x, p) = (2 pi hbar)**-1 int exp(-i p dx / hbar) psi*(x - dx/2) psi(x + dx/2) d(dx)``

    The displacement is sampled at even multiples of the grid spacing so the
    half-shifts land on grid points; ``window`` bounds ``|dx|`` (default:
    twice the grid width, i.e. everything).
    """
    hbar = psi.params.hbar
    h = psi.grid.spacing
    n = psi.grid.count
    if pgrid is None:
        pgrid = Grid1D.symmetric(psi.grid.width / 2 * hbar * psi.params.alpha**2, n)
    kfull = n - 1
    kmax = kfull if window is None else min(kfull, int(window / (2 * h)))
    Z = _pointsplit_on_grid(psi, kfull)
    if kmax < kfull:
        tail = 2 * float(np.sum(np.abs(Z[:, kmax + 1:]))) * h * 2 * h
        if tail > WIGNER_TAIL_TOL:
            raise DomainError(f"displacement window {window:g} too small: tail mass {tail:.3g}")
        Z = Z[:, : kmax + 1]
    dx = 2 * h * np.arange(kmax + 1)
    phase = np.outer(dx, pgrid.points) / hbar
    weights = np.full(kmax + 1, 2.0)
    weights[0] = 1.0
    acc = (Z.real * weights) @ np.cos(phase) + (Z.imag * weights) @ np.sin(phase)
    values = acc * (2 * h / (2 * math.pi * hbar))
    return PhaseSpaceDensity(psi.grid, pgrid, values, "B", psi.params, psi.t).check_normalized()


def density_wigner_closed(n: int, params: OscillatorParams = NATURAL,
                          xgrid: Optional[Grid1D] = None, pgrid: Optional[Grid1D] = None,
                          t: float = 0.0) -> PhaseSpaceDensity:
    """Closed-form Wigner density of oscillator level ``n``.

    ``F = (-1)**n / (pi hbar) * exp(-2H/(hbar omega)) * L_n(4H/(hbar omega))``
    with ``H = p**2/2m + m omega**2 x**2 / 2``. Stationary: ``t`` is stored only.
    """
    if int(n) != n or n < 0:
        raise ParameterError(f"n must be a non-negative integer, got {n!r}")
    xgrid = xgrid or default_xgrid(n, params)
    pgrid = pgrid or default_pgrid(n, params)
    x = xgrid.points[:, None]
    p = pgrid.points[None, :]
    energy = p**2 / (2 * params.m) + 0.5 * params.m * params.omega**2 * x**2
    s = energy / (params.hbar * params.omega)
    values = (-1) ** n / (math.pi * params.hbar) * np.exp(-2 * s) * laguerre(int(n), 4 * s)
    return PhaseSpaceDensity(xgrid, pgrid, values, "B", params, t)


# -- characteristic functions ------------------------------------------------

def _require_symmetric(grid: Grid1D):
    if abs(grid.min + grid.max) > 1e-12 * max(abs(grid.min), abs(grid.max)):
        raise ParameterError(f"displacement grid must be symmetric about 0, got [{grid.min}, {grid.max}]")


def characteristic_pointsplit(psi: WaveFunction, dxgrid: Grid1D) -> CharacteristicFunction:
    """``Z(x, dx) = psi*(x - dx/2) psi(x + dx/2)`` with cubic interpolation off-grid."""
    _require_symmetric(dxgrid)
    f = _spline(psi)
    x = psi.x[:, None]
    half = dxgrid.points[None, :] / 2
    values = np.conj(f(x - half)) * f(x + half)
    return CharacteristicFunction(psi.grid, dxgrid, values, "pointsplit", psi.params)


def _autocorrelation(psi: WaveFunction, shifts: np.ndarray) -> np.ndarray:
    """``int psi*(x') psi(x' + s) dx'`` for each shift ``s``."""
    f = _spline(psi)
    shifted = f(psi.x[None, :] + shifts[:, None])
    return shifted @ np.conj(psi.values) * psi.grid.spacing


def characteristic_factorized(psi: WaveFunction, dxgrid: Grid1D) -> CharacteristicFunction:
    """``Z(x, dx) = |psi(x)|**2 int psi*(x') psi(x' + dx) dx'``.

    The translation by ``dx`` is realized with the cubic interpolant of psi.
    """
    _require_symmetric(dxgrid)
    if dxgrid.max > psi.grid.width:
        raise DomainError(
            f"displacements up to {dxgrid.max:g} exceed the grid width {psi.grid.width:g}"
        )
    overlap = _autocorrelation(psi, dxgrid.points)
    values = np.outer(psi.density, overlap)
    return CharacteristicFunction(psi.grid, dxgrid, values, "factorized", psi.params)


def characteristic_amplitude(psi: WaveFunction) -> CharacteristicAmplitude:
    """Rank-one amplitude ``xi(x', x) = psi(x') conj(psi(x))``."""
    values = np.outer(psi.values, np.conj(psi.values))
    return CharacteristicAmplitude(psi.grid, psi.grid, values, psi.params)


def contract_amplitude(amp: CharacteristicAmplitude, dxgrid: Grid1D) -> CharacteristicFunction:
    """Characteristic function from amplitudes by the ``x'`` self-convolution

    ``Z(x, dx) = int conj(xi(x', x)) xi(x' + dx, x) dx'``.
    """
    _require_symmetric(dxgrid)
    xp = amp.xpgrid.points
    spl = CubicSpline(xp, amp.values, axis=0, extrapolate=False)
    conj = np.conj(amp.values)
    out = np.empty((amp.xgrid.count, dxgrid.count), dtype=complex)
    for k, shift in enumerate(dxgrid.points):
        shifted = np.nan_to_num(spl(xp + shift), nan=0.0)
        out[:, k] = np.sum(conj * shifted, axis=0) * amp.xpgrid.spacing
    return CharacteristicFunction(amp.xgrid, dxgrid, out, "factorized", amp.params)


def characteristic_to_density(Z: CharacteristicFunction, pgrid: Grid1D) -> PhaseSpaceDensity:
    """Invert ``Z`` over the displacement: ``(2 pi hbar)**-1 int exp(-i p dx/hbar) Z d(dx)``."""
    hbar = Z.params.hbar
    w = np.full(Z.dxgrid.count, Z.dxgrid.spacing)
    w[[0, -1]] *= 0.5
    kernel = np.exp(-1j * np.outer(Z.dxgrid.points, pgrid.points) / hbar) * w[:, None]
    values = (Z.values @ kernel).real / (2 * math.pi * hbar)
    rule = "B" if Z.rule == "pointsplit" else "A"
    return PhaseSpaceDensity(Z.xgrid, pgrid, values, rule, Z.params)


# -- Liouville residual ------------------------------------------------------

def liouville_residual(psi: WaveFunction, potential, dx: float, stationarity_tol: float = 1e-6) -> float:
    """Residual of the stationary characteristic-function equation, per unit ``dx``.

    The characteristic function is taken in its second-order expansion

    ``Z(x, dx) = [R**2 + (dx/2)**2 (R R'' - R'**2)] exp(i dx S'/hbar)``

    and substituted in ``-(hbar**2/m) d2Z/dx d(dx) + V'(x) dx Z``. For
    ``dx > 0`` the maximum over x of that expression is divided by ``dx``, so
    the truncation leaves an O(dx**2) remainder. At ``dx == 0`` the
    zeroth-order term itself is returned. x-derivatives are spectral.
    """
    params = psi.params
    hbar, m = params.hbar, params.m
    if dx < 0 or dx > 0.1 / params.alpha:
        raise ParameterError(f"dx must lie in [0, {0.1 / params.alpha:g}], got {dx!r}")

    h = psi.grid.spacing
    v = psi.values
    d1 = spectral_derivative(v, h, 1)
    d2 = spectral_derivative(v, h, 2)
    x = psi.x
    vx = np.asarray(potential(x), dtype=float)
    energy = float(np.real(np.sum(np.conj(v) * (-(hbar**2) / (2 * m) * d2 + vx * v)) * h))
    off = np.linalg.norm(-(hbar**2) / (2 * m) * d2 + vx * v - energy * v) / np.linalg.norm(v)
    if off > stationarity_tol * max(1.0, abs(energy)):
        raise ContractError(
            f"state is not stationary (||H psi - E psi|| / ||psi|| = {off:.3g}); "
            "the time-derivative term is not representable"
        )

    density = np.abs(v) ** 2
    current = hbar * np.imag(np.conj(v) * d1)  # R**2 S'
    live = density > 1e-12 * density.max()
    s_prime = np.where(live, current / np.where(live, density, 1.0), 0.0)
    # R R'' - R'**2 written through psi so that nodes of real states stay smooth
    curvature = np.real(np.conj(v) * d2) - np.abs(d1) ** 2 + 2 * density * (s_prime / hbar) ** 2

    phase = np.exp(1j * dx * s_prime / hbar)
    Z = (density + dx**2 * curvature / 4) * phase
    dZ = (dx * curvature / 2 + 1j * s_prime / hbar * (density + dx**2 * curvature / 4)) * phase
    lhs = -(hbar**2 / m) * spectral_derivative(dZ, h, 1) + potential_derivative(potential)(x) * dx * Z
    worst = float(np.max(np.abs(lhs)))
    return worst / dx if dx > 0 else worst


# -- Cohen generalized distributions ----------------------------------------

def default_cohen_grids(psi: WaveFunction):
    """(theta, tau) grids dual to the state's position and mirrored momentum grids.

    Spacings make the periodic images of the reconstructed density fall at
    least twice the grid width apart; extents follow the mirrored momentum
    range so the kernel products have decayed at the edges.
    """
    hbar = psi.params.hbar
    width = psi.grid.width
    alpha2 = psi.params.alpha**2
    theta_max = alpha2 * width
    tau_max = width / hbar
    d_theta = math.pi / width
    d_tau = math.pi / (alpha2 * hbar * width)
    n_theta = 2 * int(math.ceil(theta_max / d_theta)) + 1
    n_tau = 2 * int(math.ceil(tau_max / d_tau)) + 1
    return Grid1D.symmetric(theta_max, n_theta), Grid1D.symmetric(tau_max, n_tau)


def ambiguity_function(psi: WaveFunction, thetagrid: Grid1D, taugrid: Grid1D) -> np.ndarray:
    """``A(theta, tau) = int exp(i theta u) psi*(u - tau hbar/2) psi(u + tau hbar/2) du``."""
    hbar = psi.params.hbar
    dxgrid = Grid1D(taugrid.min * hbar, taugrid.max * hbar, taugrid.count)
    Z = characteristic_pointsplit(psi, dxgrid).values
    phase = np.exp(1j * np.outer(thetagrid.points, psi.x))
    return phase @ Z * psi.grid.spacing


def unity_kernel(thetagrid: Grid1D, taugrid: Grid1D) -> CohenKernel:
    """``f = 1`` everywhere; reproduces the Wigner density."""
    shape = (thetagrid.count, taugrid.count)
    return CohenKernel(thetagrid, taugrid, np.ones(shape, dtype=complex), np.ones(shape, dtype=bool),
                       0.0, 1.0, "unity")


def cohen_kernel_factorized(psi: WaveFunction, thetagrid: Optional[Grid1D] = None,
                            taugrid: Optional[Grid1D] = None,
                            epsilon: float = DEFAULT_EPSILON) -> CohenKernel:
    """Kernel whose generalized distribution is ``|psi|**2 |phi|**2``.

    ``f = [int int |psi(x)|**2 |phi(p)|**2 exp(i theta x + i tau p) dx dp] / A(theta, tau)``

    The denominator vanishes on curves for excited states; the kernel is
    kept only where ``|A| > epsilon * max|A|`` and set to 0 elsewhere.
    """
    if not epsilon > 0:
        raise ParameterError(f"epsilon must be positive, got {epsilon!r}")
    if thetagrid is None or taugrid is None:
        dt, du = default_cohen_grids(psi)
        thetagrid = thetagrid or dt
        taugrid = taugrid or du
    phi = momentum_transform(psi)
    chi_x = np.exp(1j * np.outer(thetagrid.points, psi.x)) @ psi.density * psi.grid.spacing
    chi_p = np.exp(1j * np.outer(taugrid.points, phi.p)) @ phi.density * phi.grid.spacing
    numerator = np.outer(chi_x, chi_p)
    denominator = ambiguity_function(psi, thetagrid, taugrid)
    mag = np.abs(denominator)
    mask = mag > epsilon * mag.max()
    values = np.zeros_like(numerator)
    values[mask] = numerator[mask] / denominator[mask]
    weight = np.abs(numerator)
    coverage = float(weight[mask].sum() / weight.sum())
    return CohenKernel(thetagrid, taugrid, values, mask, epsilon, coverage, "factorized")


def cohen_distribution(psi: WaveFunction, kernel: CohenKernel, xgrid: Optional[Grid1D] = None,
                       pgrid: Optional[Grid1D] = None,
                       min_coverage: float = DEFAULT_MIN_COVERAGE) -> PhaseSpaceDensity:
    """Generalized distribution

    ``F(x, p) = (1/4 pi**2) int int int exp(-i theta x - i tau p + i theta u)
    f(theta, tau) psi*(u - tau hbar/2) psi(u + tau hbar/2) dtheta dtau du``

    evaluated as the ambiguity function (the ``u`` integral) followed by a
    two-dimensional inverse transform. Masked kernel entries contribute 0.
    """
    if kernel.coverage < min_coverage:
        raise AccuracyError(
            f"kernel covers {kernel.coverage:.6f} of its support, below the required {min_coverage:g}"
        )
    xgrid = xgrid or psi.grid
    if pgrid is None:
        pgrid = Grid1D.symmetric(psi.grid.width / 2 * psi.params.hbar * psi.params.alpha**2,
                                 psi.grid.count)
    th, ta = kernel.thetagrid, kernel.taugrid
    amb = ambiguity_function(psi, th, ta)
    integrand = np.where(kernel.mask, kernel.values * amb, 0.0)
    ex = np.exp(-1j * np.outer(xgrid.points, th.points))
    ep = np.exp(-1j * np.outer(ta.points, pgrid.points))
    values = (ex @ integrand @ ep).real * (th.spacing * ta.spacing / (4 * math.pi**2))
    return PhaseSpaceDensity(xgrid, pgrid, values, f"cohen:{kernel.kernel_id}", psi.params, psi.t)
