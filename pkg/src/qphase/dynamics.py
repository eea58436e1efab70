"""Time evolution and hydrodynamic diagnostics.

``propagate`` advances a state with Strang-split spectral steps. The
diagnostics work on the stored snapshots only: time derivatives are central
differences over neighbouring snapshots (second-order one-sided at the two
ends), never re-propagation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial

from .errors import AliasingError, ParameterError, StabilityError
from .states import WaveFunction

__all__ = [
    "Potential",
    "TrajectoryRecord",
    "propagate",
    "ehrenfest_check",
    "continuity_residual",
    "transport_residual",
    "madelung_residuals",
    "spectral_tail",
]

SPECTRAL_TAIL_TOL = 1e-10
NODE_CUTOFF = 1e-6
_FILTER_FLOOR = 1e-13


@dataclass(frozen=True)
class Potential:
    """Polynomial potential ``V(x) = sum_k coeffs[k] x**k``."""

    kind: str
    coeffs: Tuple[float, ...]

    @classmethod
    def harmonic(cls, m: float = 1.0, omega: float = 1.0) -> "Potential":
        return cls("harmonic", (0.0, 0.0, 0.5 * m * omega**2))

    @classmethod
    def quartic(cls, lam: float, m: float = 1.0, omega: float = 0.0) -> "Potential":
        """``lam x**4``, optionally on top of a harmonic well of frequency ``omega``."""
        return cls("quartic", (0.0, 0.0, 0.5 * m * omega**2, 0.0, lam))

    @classmethod
    def polynomial(cls, coeffs: Sequence[float]) -> "Potential":
        return cls("polynomial", tuple(float(c) for c in coeffs))

    @property
    def degree(self) -> int:
        nz = [k for k, c in enumerate(self.coeffs) if c != 0]
        return nz[-1] if nz else 0

    def __call__(self, x):
        return Polynomial(self.coeffs)(np.asarray(x, dtype=float))

    def derivative(self, x):
        return Polynomial(self.coeffs).deriv()(np.asarray(x, dtype=float))

    def describe(self) -> str:
        return f"{self.kind}{list(self.coeffs)}"


@dataclass(frozen=True)
class TrajectoryRecord:
    """Expectation values and residuals sampled at the snapshot times."""

    times: np.ndarray
    xbar: np.ndarray
    pbar: np.ndarray
    dp2: np.ndarray
    norm: np.ndarray
    force_mean: np.ndarray
    force_at_mean: np.ndarray
    residual_ehrenfest_x: np.ndarray
    residual_ehrenfest_p: np.ndarray
    residual_continuity: np.ndarray
    residual_transport: np.ndarray

    COLUMNS = (
        "t", "xbar", "pbar", "dp2", "norm",
        "residual_ehrenfest_x", "residual_ehrenfest_p", "residual_continuity", "residual_transport",
    )

    def rows(self):
        cols = [self.times, self.xbar, self.pbar, self.dp2, self.norm, self.residual_ehrenfest_x,
                self.residual_ehrenfest_p, self.residual_continuity, self.residual_transport]
        return np.column_stack(cols)


def _wavenumbers(grid):
    return 2 * np.pi * np.fft.fftfreq(grid.count, grid.spacing)


def spectral_tail(psi_values, grid) -> float:
    """Fraction of the norm carried by wavenumbers above 2/3 of Nyquist."""
    k = _wavenumbers(grid)
    power = np.abs(np.fft.fft(psi_values)) ** 2
    high = np.abs(k) > (2.0 / 3.0) * np.abs(k).max()
    return float(power[high].sum() / power.sum())


def propagate(psi0: WaveFunction, V: Potential, dt: float, steps: int,
              save_every: int = 1) -> List[WaveFunction]:
    """Strang-split evolution: half kick, spectral drift, half kick.

    Returns ``psi0`` followed by every ``save_every``-th state. Each step is
    exactly unitary; norm drift is rounding only.
    """
    if not dt > 0:
        raise ParameterError(f"dt must be positive, got {dt!r}")
    if int(steps) != steps or steps < 1:
        raise ParameterError(f"steps must be a positive integer, got {steps!r}")
    if int(save_every) != save_every or save_every < 1:
        raise ParameterError(f"save_every must be a positive integer, got {save_every!r}")
    params = psi0.params
    grid = psi0.grid
    hbar, m = params.hbar, params.m
    vx = V(grid.points)
    vmax = float(np.max(np.abs(vx)))
    if dt * vmax / hbar >= 0.5:
        raise StabilityError(
            f"dt * max|V| / hbar = {dt * vmax / hbar:.3g} >= 0.5; reduce dt or the grid extent"
        )
    tail = spectral_tail(psi0.values, grid)
    if tail > SPECTRAL_TAIL_TOL:
        raise AliasingError(f"initial spectral tail {tail:.3g} exceeds {SPECTRAL_TAIL_TOL:g}; refine the grid")

    half_kick = np.exp(-0.5j * dt * vx / hbar)
    k = _wavenumbers(grid)
    drift = np.exp(-0.5j * dt * hbar * k**2 / m)
    psi = np.array(psi0.values)
    out = [psi0]
    for step in range(1, int(steps) + 1):
        psi = half_kick * np.fft.ifft(drift * np.fft.fft(half_kick * psi))
        if step % save_every == 0 or step == steps:
            out.append(WaveFunction(grid, psi, params, psi0.t + step * dt, psi0.label))
    tail = spectral_tail(psi, grid)
    if tail > SPECTRAL_TAIL_TOL:
        raise AliasingError(f"spectral tail grew to {tail:.3g} during the run; refine the grid")
    return out


def _uniform_step(snapshots) -> float:
    if len(snapshots) < 5:
        raise ParameterError(f"need at least 5 snapshots, got {len(snapshots)}")
    times = np.array([s.t for s in snapshots])
    steps = np.diff(times)
    if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * steps.mean():
        raise ParameterError("snapshot times must be strictly increasing with a fixed step")
    return float(steps.mean())


def _stack(snapshots):
    return np.array([s.values for s in snapshots])


def _momentum_moments(values, grid, hbar):
    """``<p>`` and ``<p**2>`` per snapshot from the FFT of each row."""
    k = _wavenumbers(grid)
    power = np.abs(np.fft.fft(values, axis=1)) ** 2
    total = power.sum(axis=1)
    p1 = hbar * (power @ k) / total
    p2 = hbar**2 * (power @ k**2) / total
    return p1, p2


def _filtered_derivatives(values, grid, orders):
    """Spectral x-derivatives of every snapshot row, low-pass filtered.

    Wavenumbers whose amplitude stays below ``1e-13`` of the peak over the
    whole run carry only rounding noise; dropping them keeps high-order
    derivatives at noise level ``K**order * eps`` instead of
    ``(pi/h)**order * eps``. Returns the filtered values followed by the
    requested derivatives.
    """
    k = _wavenumbers(grid)
    spec = np.fft.fft(values, axis=-1)
    amp = np.abs(spec).reshape(-1, k.size).max(axis=0)
    keep = amp > _FILTER_FLOOR * amp.max()
    spec = np.where(keep, spec, 0.0)
    out = [np.fft.ifft(spec, axis=-1)]
    for order in orders:
        out.append(np.fft.ifft((1j * k) ** order * spec, axis=-1))
    return out


def _density_gradient(values, grid):
    psi, d1 = _filtered_derivatives(values, grid, (1,))
    return 2 * np.real(np.conj(psi) * d1)


def continuity_residual(snapshots: Sequence[WaveFunction]) -> np.ndarray:
    """``max_x |d rho/dt + d/dx (<p> rho / m)|`` at each snapshot time.

    Central differences in t, filtered spectral derivatives in x. Small only when the density is
    transported rigidly (coherent packets in a harmonic well, stationary
    states); otherwise it is a diagnostic.
    """
    dt = _uniform_step(snapshots)
    grid = snapshots[0].grid
    params = snapshots[0].params
    values = _stack(snapshots)
    rho = np.abs(values) ** 2
    pbar, _ = _momentum_moments(values, grid, params.hbar)
    drho_dt = np.gradient(rho, dt, axis=0, edge_order=2)
    flux = pbar[:, None] * _density_gradient(values, grid) / params.m
    return np.max(np.abs(drho_dt + flux), axis=1)


def transport_residual(snapshots: Sequence[WaveFunction], V: Potential) -> np.ndarray:
    """``max_x |rho (d<p>/dt + V') + (<p**2> - <p>**2)/m * d rho/dx|``.

    Restricted to ``rho > 1e-6 max rho``. Vanishes analytically for
    coherent packets in a harmonic well.
    """
    dt = _uniform_step(snapshots)
    grid = snapshots[0].grid
    params = snapshots[0].params
    values = _stack(snapshots)
    rho = np.abs(values) ** 2
    pbar, p2 = _momentum_moments(values, grid, params.hbar)
    dp2 = p2 - pbar**2
    dpbar_dt = np.gradient(pbar, dt, edge_order=2)
    drho_dx = _density_gradient(values, grid)
    force = V.derivative(grid.points)[None, :]
    expr = rho * (dpbar_dt[:, None] + force) + dp2[:, None] / params.m * drho_dx
    live = rho > NODE_CUTOFF * rho.max(axis=1, keepdims=True)
    return np.max(np.where(live, np.abs(expr), 0.0), axis=1)


def madelung_residuals(snapshots: Sequence[WaveFunction], V: Potential) -> Tuple[float, float]:
    """Residuals of the polar-form equations, maximized over x and t.

    Returns ``(continuity, quantum_hj)`` where

    * continuity is ``|d R**2/dt + d/dx (R**2 S' / m)|``;
    * quantum_hj is ``|d/dx {dS/dt + S'**2/2m + V - hbar**2 R''/(2 m R)}|``.

    Only points with ``R**2 > 1e-6 max R**2`` count. Everything is written
    through ``psi`` and its derivatives, so no phase unwrapping is needed and
    nodes of real states stay regular:
    ``R**2 S' = hbar Im(psi* psi')``, ``R**2 dS/dt = hbar Im(psi* dpsi/dt)``
    and ``R''/R = Re(psi* psi'')/R**2 + (S'/hbar)**2``. The outer x-derivative
    of the brace is expanded by the product rule rather than differenced.
    """
    dt = _uniform_step(snapshots)
    grid = snapshots[0].grid
    params = snapshots[0].params
    hbar, m = params.hbar, params.m
    psi, d1, d2, d3 = _filtered_derivatives(_stack(snapshots), grid, (1, 2, 3))
    psi_t = np.gradient(psi, dt, axis=0, edge_order=2)
    d1_t = np.gradient(d1, dt, axis=0, edge_order=2)
    rho = np.abs(psi) ** 2
    cpsi = np.conj(psi)

    live = rho > NODE_CUTOFF * rho.max(axis=1, keepdims=True)
    safe = np.where(live, rho, 1.0)
    drho = 2 * np.real(cpsi * d1)
    eq6 = np.gradient(rho, dt, axis=0, edge_order=2) + hbar * np.imag(cpsi * d2) / m

    def over_rho(num, dnum):
        # value and x-derivative of num / rho
        return num / safe, dnum / safe - num * drho / safe**2

    s_x, s_xx = over_rho(hbar * np.imag(cpsi * d1), hbar * np.imag(cpsi * d2))
    _, s_tx = over_rho(hbar * np.imag(cpsi * psi_t),
                       hbar * np.imag(np.conj(d1) * psi_t + cpsi * d1_t))
    _, u_x = over_rho(np.real(cpsi * d2), np.real(np.conj(d1) * d2 + cpsi * d3))
    r_ratio_x = u_x + 2 * s_x * s_xx / hbar**2
    eq7 = s_tx + s_x * s_xx / m + V.derivative(grid.points)[None, :] - hbar**2 / (2 * m) * r_ratio_x

    eq6_max = float(np.max(np.abs(np.where(live, eq6, 0.0))))
    eq7_max = float(np.max(np.abs(np.where(live, eq7, 0.0))))
    return eq6_max, eq7_max


def ehrenfest_check(snapshots: Sequence[WaveFunction], V: Potential) -> TrajectoryRecord:
    """Expectation trajectory with Ehrenfest, continuity and transport residuals.

    ``residual_ehrenfest_x = |d<x>/dt - <p>/m|`` and
    ``residual_ehrenfest_p = |d<p>/dt + <V'>|``, both O(dt**2).
    """
    dt = _uniform_step(snapshots)
    grid = snapshots[0].grid
    params = snapshots[0].params
    values = _stack(snapshots)
    rho = np.abs(values) ** 2
    h = grid.spacing
    x = grid.points
    norm = rho.sum(axis=1) * h
    xbar = rho @ x * h / norm
    pbar, p2 = _momentum_moments(values, grid, params.hbar)
    force_mean = rho @ V.derivative(x) * h / norm
    force_at_mean = V.derivative(xbar)
    res_x = np.abs(np.gradient(xbar, dt, edge_order=2) - pbar / params.m)
    res_p = np.abs(np.gradient(pbar, dt, edge_order=2) + force_mean)
    times = np.array([s.t for s in snapshots])
    return TrajectoryRecord(
        times, xbar, pbar, p2 - pbar**2, norm, force_mean, force_at_mean, res_x, res_p,
        continuity_residual(snapshots), transport_residual(snapshots, V),
    )
