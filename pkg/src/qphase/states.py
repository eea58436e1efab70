"""Grids, oscillator parameters and one-dimensional pure states.

Everything here is immutable: state arrays are flagged read-only on
construction and every operation returns a new object.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ContractError, DomainError, ParameterError
from .specfun import hermite_scaled

__all__ = [
    "OscillatorParams",
    "NATURAL",
    "Grid1D",
    "WaveFunction",
    "MomentumWaveFunction",
    "MadelungFields",
    "default_half_width",
    "default_xgrid",
    "default_pgrid",
    "ho_eigenstate",
    "gaussian_packet",
    "superposition",
    "momentum_transform",
    "position_transform",
    "madelung_decompose",
    "hamiltonian_residual",
    "spectral_derivative",
]

NORM_TOL = 1e-8
DECAY_TOL = 1e-10
# Half-width in units of sqrt(2n+1)/alpha, floored so that the ground-state
# tail is below DECAY_TOL at the grid edge.
EXTENT_FACTOR = 5.0
MIN_HALF_WIDTH = 8.0
DEFAULT_COUNT = 1024


@dataclass(frozen=True)
class OscillatorParams:
    """Mass, angular frequency and reduced Planck constant."""

    m: float = 1.0
    omega: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("m", "omega", "hbar"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ParameterError(f"{name} must be a positive finite number, got {value!r}")

    @property
    def alpha(self) -> float:
        """Inverse oscillator length ``sqrt(m omega / hbar)``."""
        return math.sqrt(self.m * self.omega / self.hbar)

    def energy(self, n: int) -> float:
        return self.hbar * self.omega * (n + 0.5)

    def potential(self, x):
        return 0.5 * self.m * self.omega**2 * np.asarray(x) ** 2


NATURAL = OscillatorParams()


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid of ``count`` points from ``min`` to ``max`` inclusive."""

    min: float
    max: float
    count: int

    def __post_init__(self):
        if not (math.isfinite(self.min) and math.isfinite(self.max)) or self.min >= self.max:
            raise ParameterError(f"grid needs min < max, got [{self.min}, {self.max}]")
        if int(self.count) != self.count or self.count < 2:
            raise ParameterError(f"grid count must be an integer >= 2, got {self.count!r}")

    @classmethod
    def symmetric(cls, half_width: float, count: int) -> "Grid1D":
        return cls(-half_width, half_width, count)

    @property
    def spacing(self) -> float:
        return (self.max - self.min) / (self.count - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.min, self.max, self.count)

    @property
    def width(self) -> float:
        return self.max - self.min

    def covers(self, lo: float, hi: float) -> bool:
        return self.min <= lo and self.max >= hi

    def as_dict(self) -> dict:
        return {"min": self.min, "max": self.max, "count": self.count}


def _frozen(values, dtype=complex) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


def _check_normalized(values, spacing, what):
    norm = float(np.sum(np.abs(values) ** 2) * spacing)
    if abs(norm - 1.0) > NORM_TOL:
        raise ContractError(f"{what} is not normalized: norm = {norm:.12g}")


@dataclass(frozen=True)
class WaveFunction:
    """Position-space amplitude ``psi(x; t)`` sampled on a uniform grid."""

    grid: Grid1D
    values: np.ndarray
    params: OscillatorParams = NATURAL
    t: float = 0.0
    label: Optional[str] = None

    def __post_init__(self):
        values = _frozen(self.values)
        if values.shape != (self.grid.count,):
            raise ParameterError(f"expected {self.grid.count} samples, got shape {values.shape}")
        object.__setattr__(self, "values", values)
        _check_normalized(values, self.grid.spacing, "wave function")
        peak = np.max(np.abs(values))
        edge = max(abs(values[0]), abs(values[-1]))
        if edge >= DECAY_TOL * peak:
            raise DomainError(
                f"wave function does not decay at the grid edges "
                f"(|psi(edge)|/max|psi| = {edge / peak:.3g}); enlarge the grid"
            )

    @property
    def x(self) -> np.ndarray:
        return self.grid.points

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def norm(self) -> float:
        return float(np.sum(self.density) * self.grid.spacing)

    def mean_x(self) -> float:
        return float(np.sum(self.x * self.density) * self.grid.spacing)

    def mean_p(self) -> float:
        """``<p>`` from the spectral derivative; exact for band-limited states."""
        k = 2 * np.pi * np.fft.fftfreq(self.grid.count, self.grid.spacing)
        spec = np.fft.fft(self.values)
        return float(self.params.hbar * np.sum(k * np.abs(spec) ** 2) / np.sum(np.abs(spec) ** 2))


@dataclass(frozen=True)
class MomentumWaveFunction:
    """Momentum-space amplitude ``phi(p; t)`` on a uniform momentum grid."""

    grid: Grid1D
    values: np.ndarray
    params: OscillatorParams = NATURAL
    t: float = 0.0

    def __post_init__(self):
        values = _frozen(self.values)
        if values.shape != (self.grid.count,):
            raise ParameterError(f"expected {self.grid.count} samples, got shape {values.shape}")
        object.__setattr__(self, "values", values)
        _check_normalized(values, self.grid.spacing, "momentum amplitude")

    @property
    def p(self) -> np.ndarray:
        return self.grid.points

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2


@dataclass(frozen=True)
class MadelungFields:
    """Polar decomposition ``psi = R exp(i S / hbar)``.

    ``S`` is NaN where ``R`` is below the node threshold; ``defined`` marks
    the complementary region.
    """

    grid: Grid1D
    R: np.ndarray
    S: np.ndarray
    hbar: float
    defined: np.ndarray = field(repr=False)

    def reconstruct(self) -> np.ndarray:
        out = np.zeros(self.grid.count, dtype=complex)
        d = self.defined
        out[d] = self.R[d] * np.exp(1j * self.S[d] / self.hbar)
        return out


def default_half_width(n_max: int, params: OscillatorParams = NATURAL) -> float:
    """Default position half-width for states up to level ``n_max``."""
    return max(EXTENT_FACTOR * math.sqrt(2 * n_max + 1), MIN_HALF_WIDTH) / params.alpha


def default_xgrid(n_max: int, params: OscillatorParams = NATURAL, count: int = DEFAULT_COUNT) -> Grid1D:
    return Grid1D.symmetric(default_half_width(n_max, params), count)


def default_pgrid(n_max: int, params: OscillatorParams = NATURAL, count: int = DEFAULT_COUNT) -> Grid1D:
    """Momentum grid mirroring :func:`default_xgrid` (scaled by ``hbar alpha**2``)."""
    half = default_half_width(n_max, params) * params.hbar * params.alpha**2
    return Grid1D.symmetric(half, count)


def _decay_extent(n: int) -> float:
    """Smallest dimensionless |y| beyond which psi_n stays below DECAY_TOL of its peak."""
    y = np.linspace(0.0, 2 * math.sqrt(2 * n + 1) + 12.0, 8001)
    vals = np.abs(hermite_scaled(n, y))
    above = np.nonzero(vals >= DECAY_TOL * vals.max())[0]
    return float(y[above[-1] + 1])


def ho_eigenstate(n: int, params: OscillatorParams = NATURAL, grid: Optional[Grid1D] = None,
                  t: float = 0.0) -> WaveFunction:
    """Harmonic-oscillator eigenstate

    ``psi_n(x, t) = (alpha**2/pi)**(1/4) (2**n n!)**(-1/2) exp(-alpha**2 x**2/2)
    H_n(alpha x) exp(-i E_n t / hbar)``.
    """
    if int(n) != n or n < 0:
        raise ParameterError(f"n must be a non-negative integer, got {n!r}")
    n = int(n)
    alpha = params.alpha
    if grid is None:
        grid = default_xgrid(n, params)
    required = max(EXTENT_FACTOR * math.sqrt(2 * n + 1), _decay_extent(n)) / alpha
    if not grid.covers(-required, required):
        raise DomainError(
            f"grid [{grid.min:g}, {grid.max:g}] too small for n={n}: "
            f"needs at least [{-required:.6g}, {required:.6g}]"
        )
    phase = np.exp(-1j * params.energy(n) * t / params.hbar)
    values = math.sqrt(alpha) * hermite_scaled(n, alpha * grid.points) * phase
    return WaveFunction(grid, values, params, t, f"HO n={n}")


def gaussian_packet(x0: float, p0: float, sigma: float, params: OscillatorParams = NATURAL,
                    grid: Optional[Grid1D] = None, t: float = 0.0) -> WaveFunction:
    """Normalized Gaussian ``exp(-(x-x0)**2/(4 sigma**2) + i p0 x / hbar)``.

    ``sigma`` is the position standard deviation; ``sigma = 1/(sqrt(2) alpha)``
    gives the coherent state of the oscillator defined by ``params``.
    """
    if not sigma > 0:
        raise ParameterError(f"sigma must be positive, got {sigma!r}")
    # |psi| falls to DECAY_TOL of its peak at this distance from x0.
    reach = max(8.0, 2.0 * math.sqrt(-math.log(DECAY_TOL))) * sigma
    if grid is None:
        grid = Grid1D(x0 - reach - sigma, x0 + reach + sigma, DEFAULT_COUNT)
    if not grid.covers(x0 - reach, x0 + reach):
        raise DomainError(
            f"grid [{grid.min:g}, {grid.max:g}] too small for packet at x0={x0:g}, sigma={sigma:g}: "
            f"needs at least [{x0 - reach:.6g}, {x0 + reach:.6g}]"
        )
    x = grid.points
    amp = (2 * math.pi * sigma**2) ** -0.25 * np.exp(-((x - x0) ** 2) / (4 * sigma**2))
    values = amp * np.exp(1j * p0 * x / params.hbar)
    return WaveFunction(grid, values, params, t, f"gaussian x0={x0:g} p0={p0:g} sigma={sigma:g}")


def superposition(coefficients, params: OscillatorParams = NATURAL, grid: Optional[Grid1D] = None,
                  t: float = 0.0) -> WaveFunction:
    """Normalized superposition ``sum_n c_n psi_n`` of oscillator eigenstates."""
    coefficients = np.asarray(coefficients, dtype=complex)
    if coefficients.ndim != 1 or not np.any(coefficients):
        raise ParameterError("coefficients must be a non-zero 1-D sequence")
    n_max = len(coefficients) - 1
    if grid is None:
        grid = default_xgrid(n_max, params)
    coefficients = coefficients / np.linalg.norm(coefficients)
    values = np.zeros(grid.count, dtype=complex)
    for n, c in enumerate(coefficients):
        if c != 0:
            values += c * ho_eigenstate(n, params, grid, t).values
    return WaveFunction(grid, values, params, t, f"superposition n<={n_max}")


def spectral_derivative(values, spacing: float, order: int = 1, axis: int = -1):
    """Derivative of periodic-extended samples by FFT.

    Accurate to rounding for smooth functions that vanish at both ends of the
    grid; the Nyquist mode is dropped for odd orders.
    """
    values = np.asarray(values)
    n = values.shape[axis]
    k = 2 * np.pi * np.fft.fftfreq(n, spacing)
    factor = (1j * k) ** order
    if order % 2 and n % 2 == 0:
        factor[n // 2] = 0.0
    shape = [1] * values.ndim
    shape[axis] = n
    out = np.fft.ifft(np.fft.fft(values, axis=axis) * factor.reshape(shape), axis=axis)
    return out if np.iscomplexobj(values) else out.real


def _fourier_matrix(out_points, in_points, hbar, sign):
    return np.exp(sign * 1j * np.outer(out_points, in_points) / hbar)


def momentum_transform(psi: WaveFunction, pgrid: Optional[Grid1D] = None) -> MomentumWaveFunction:
    """``phi(p) = (2 pi hbar)**(-1/2) int exp(-i p x / hbar) psi(x) dx``.

    Evaluated as a direct Riemann sum, which is spectrally accurate for
    states that have decayed at the grid edges.
    """
    hbar = psi.params.hbar
    if pgrid is None:
        half = (psi.grid.max - psi.grid.min) / 2 * hbar * psi.params.alpha**2
        pgrid = Grid1D.symmetric(half, psi.grid.count)
    kernel = _fourier_matrix(pgrid.points, psi.x, hbar, -1)
    values = kernel @ psi.values * (psi.grid.spacing / math.sqrt(2 * math.pi * hbar))
    norm = float(np.sum(np.abs(values) ** 2) * pgrid.spacing)
    if abs(norm - 1.0) > NORM_TOL:
        raise DomainError(
            f"momentum grid [{pgrid.min:g}, {pgrid.max:g}] misses part of the state "
            f"(captured norm {norm:.12g})"
        )
    return MomentumWaveFunction(pgrid, values, psi.params, psi.t)


def position_transform(phi: MomentumWaveFunction, xgrid: Grid1D) -> np.ndarray:
    """Inverse of :func:`momentum_transform`, returning samples on ``xgrid``."""
    hbar = phi.params.hbar
    kernel = _fourier_matrix(xgrid.points, phi.p, hbar, +1)
    return kernel @ phi.values * (phi.grid.spacing / math.sqrt(2 * math.pi * hbar))


def madelung_decompose(psi: WaveFunction, threshold: float = 1e-12) -> MadelungFields:
    """Split ``psi`` into modulus ``R`` and action ``S``.

    The phase is unwrapped outward from the maximum of ``R``; ``S`` is left
    undefined (NaN) where ``R < threshold * max R``.
    """
    R = np.abs(psi.values)
    defined = R > threshold * R.max()
    angle = np.angle(psi.values)
    S = np.full(psi.grid.count, np.nan)
    start = int(np.argmax(R))
    idx = np.nonzero(defined)[0]
    right = idx[idx >= start]
    left = idx[idx <= start][::-1]
    S[right] = np.unwrap(angle[right])
    S[left] = np.unwrap(angle[left])
    S *= psi.params.hbar
    R.setflags(write=False)
    S.setflags(write=False)
    defined.setflags(write=False)
    return MadelungFields(psi.grid, R, S, psi.params.hbar, defined)


def hamiltonian_residual(psi: WaveFunction, potential: Callable, E: float) -> float:
    """Relative residual ``||H psi - E psi|| / ||psi||`` on interior points.

    The kinetic term uses the three-point second difference, so the residual
    of an exact eigenpair is O(spacing**2).
    """
    h = psi.grid.spacing
    v = psi.values
    lap = (v[2:] - 2 * v[1:-1] + v[:-2]) / h**2
    x_in = psi.x[1:-1]
    h_psi = -(psi.params.hbar**2 / (2 * psi.params.m)) * lap + np.asarray(potential(x_in)) * v[1:-1]
    return float(np.linalg.norm(h_psi - E * v[1:-1]) / np.linalg.norm(v[1:-1]))
