"""Expectation values under the two correspondence rules.

Rule A treats ``x`` and ``p`` as commuting factors, so mixed moments factor
into products of lateral moments. Rule B integrates against the Wigner
density, equivalently differentiates the point-split characteristic function
at zero displacement. Lateral moments (pure powers of ``x`` or of ``p``)
must agree between the two.
"""
from __future__ import annotations

import math
from dataclasses import astuple, dataclass
from fractions import Fraction
from typing import Callable, List, Optional, Tuple, Union

import numpy as np

from .errors import AccuracyError, ContractError, ParameterError, UnsupportedDepthError
from .phasespace import FOURIER_CONSISTENCY_TOL, PhaseSpaceDensity
from .specfun import gauss_hermite, hermite_function_parts, laguerre
from .states import (
    NATURAL,
    MomentumWaveFunction,
    OscillatorParams,
    WaveFunction,
    momentum_transform,
    spectral_derivative,
)

__all__ = [
    "MomentResult",
    "DispersionRow",
    "moment_phase_space",
    "moment_rule_A",
    "moment_rule_B_pointsplit",
    "energy_moments",
    "ho_moment",
    "table1",
    "table1_reference",
    "TABLE1_COLUMNS",
]

MAX_TOTAL_POWER = 8
AGREEMENT_TOL = 1e-8


@dataclass(frozen=True)
class MomentResult:
    """``<x**n_x p**m_p>`` with provenance and an error estimate."""

    n_x: int
    m_p: int
    value: float
    rule: str
    method: str
    est_error: float

    @property
    def powers(self) -> Tuple[int, int]:
        return self.n_x, self.m_p


TABLE1_COLUMNS = ("Ebar", "x2bar", "dxdp", "x4bar", "x2p2_A", "x2p2_B", "dE2_A", "dE2_B")


@dataclass(frozen=True)
class DispersionRow:
    n: int
    Ebar: float
    x2bar: float
    dxdp: float
    x4bar: float
    x2p2_A: float
    x2p2_B: float
    dE2_A: float
    dE2_B: float

    def values(self) -> Tuple[float, ...]:
        return astuple(self)[1:]


def _check_powers(n_x, m_p):
    for name, val in (("n_x", n_x), ("m_p", m_p)):
        if int(val) != val or val < 0:
            raise ParameterError(f"{name} must be a non-negative integer, got {val!r}")
    return int(n_x), int(m_p)


def _rule_tag(rule, n_x, m_p):
    return "lateral" if n_x == 0 or m_p == 0 else rule


def moment_phase_space(F: PhaseSpaceDensity, n_x: int, m_p: int) -> MomentResult:
    """``int int x**n_x p**m_p F dx dp`` on the density's grid.

    ``est_error`` is the change when the grid is thinned to every other point.
    """
    n_x, m_p = _check_powers(n_x, m_p)
    if n_x + m_p > MAX_TOTAL_POWER:
        raise AccuracyError(f"total power {n_x + m_p} exceeds the grid accuracy bound {MAX_TOTAL_POWER}")
    x = F.xgrid.points
    p = F.pgrid.points

    def integrate(step):
        xs, ps, vals = x[::step], p[::step], F.values[::step, ::step]
        return float((xs**n_x) @ vals @ (ps**m_p)) * F.cell * step * step

    value = integrate(1)
    err = abs(value - integrate(2))
    if err > 1e-6 * max(1.0, abs(value)):
        raise AccuracyError(
            f"<x^{n_x} p^{m_p}> is not resolved by the grid (refinement change {err:.3g})"
        )
    return MomentResult(n_x, m_p, value, _rule_tag(F.rule, n_x, m_p), "quadrature-2D", err)


def _grid_moment(points, density, spacing, k):
    full = float(np.sum(points**k * density) * spacing)
    half = float(np.sum(points[::2] ** k * density[::2]) * 2 * spacing)
    return full, abs(full - half)


def moment_rule_A(psi: WaveFunction, phi: MomentumWaveFunction, n_x: int, m_p: int) -> MomentResult:
    """Factorized moment ``(int |psi|**2 x**n_x dx) (int |phi|**2 p**m_p dp)``."""
    n_x, m_p = _check_powers(n_x, m_p)
    reference = momentum_transform(psi, phi.grid)
    if np.max(np.abs(reference.values - phi.values)) > FOURIER_CONSISTENCY_TOL:
        raise ContractError("momentum amplitude is not the Fourier transform of psi")
    xm, ex = _grid_moment(psi.x, psi.density, psi.grid.spacing, n_x)
    pm, ep = _grid_moment(phi.p, phi.density, phi.grid.spacing, m_p)
    err = abs(xm) * ep + abs(pm) * ex + ex * ep
    return MomentResult(n_x, m_p, xm * pm, _rule_tag("A", n_x, m_p), "factorized-1D", err)


# Fourth-order central stencils in the displacement, sampled at k*s for k = -2..2.
_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0


def _pointsplit_moment(psi, n_x, m_p, stride):
    """Rule-B moment using displacement step ``2 * stride * h``."""
    v = psi.values
    pad = 2 * stride
    padded = np.concatenate([np.zeros(pad), v, np.zeros(pad)])
    idx = np.arange(psi.grid.count) + pad
    # Z(x, 2 j stride h) = conj(psi(x - j stride h)) psi(x + j stride h)
    Z = np.stack([np.conj(padded[idx - j * stride]) * padded[idx + j * stride] for j in (-2, -1, 0, 1, 2)])
    s = 2 * stride * psi.grid.spacing
    hbar = psi.params.hbar
    if m_p == 0:
        deriv = Z[2]
    elif m_p == 1:
        deriv = -1j * hbar * np.tensordot(_D1, Z, axes=1) / s
    else:
        deriv = -(hbar**2) * np.tensordot(_D2, Z, axes=1) / s**2
    return float(np.real(np.sum(psi.x**n_x * deriv)) * psi.grid.spacing)


def moment_rule_B_pointsplit(psi: WaveFunction, n_x: int, m_p: int) -> MomentResult:
    """``int x**n_x [(-i hbar d/d(dx))**m_p Z(x, dx)]_{dx=0} dx`` by central differences.

    Derivatives use fourth-order stencils on displacements that are even
    multiples of the grid spacing. Limited to ``m_p <= 2``; use
    :func:`moment_phase_space` on a Wigner density for higher powers.
    """
    n_x, m_p = _check_powers(n_x, m_p)
    if m_p > 2:
        raise UnsupportedDepthError(f"m_p={m_p} exceeds the finite-difference depth limit 2")
    value = _pointsplit_moment(psi, n_x, m_p, 1)
    err = abs(value - _pointsplit_moment(psi, n_x, m_p, 2)) if m_p else 0.0
    return MomentResult(n_x, m_p, value, _rule_tag("B", n_x, m_p), "finite-difference", err)


def _polynomial_degree(potential):
    return getattr(potential, "degree", None)


def energy_moments(state: Union[WaveFunction, PhaseSpaceDensity], potential: Callable,
                   order: int = 2, rule: str = "A") -> Tuple[float, Optional[float]]:
    """Mean energy and energy variance ``(Ebar, dE2)``.

    For a density the rule is the density's own. For a wave function,
    ``rule="A"`` factorizes ``<H**2>`` through the position and momentum
    marginals, while ``rule="B"`` reproduces Wigner integration: the
    ``p**2 V(x)`` cross term is weighted by the second displacement
    derivative of the point-split product. ``order=1`` returns
    ``(Ebar, None)``.
    """
    if order not in (1, 2):
        raise ParameterError(f"order must be 1 or 2, got {order!r}")
    degree = _polynomial_degree(potential)
    if degree is not None and degree > 4:
        raise AccuracyError(f"potential degree {degree} exceeds the quadrature budget of 4")

    if isinstance(state, PhaseSpaceDensity):
        m = state.params.m
        x = state.xgrid.points
        p = state.pgrid.points
        H = p[None, :] ** 2 / (2 * m) + np.asarray(potential(x))[:, None]

        def integrate(step):
            vals = state.values[::step, ::step]
            hh = H[::step, ::step]
            c = state.cell * step * step
            return float(np.sum(hh * vals) * c), float(np.sum(hh**2 * vals) * c)

        e1, e2 = integrate(1)
        if degree is None:
            c1, c2 = integrate(2)
            if abs(c1 - e1) > 1e-8 * max(1.0, abs(e1)) or abs(c2 - e2) > 1e-8 * max(1.0, abs(e2)):
                raise AccuracyError("energy moments of a non-polynomial potential are not resolved by the grid")
        return (e1, e2 - e1**2) if order == 2 else (e1, None)

    psi = state
    m = psi.params.m
    hbar = psi.params.hbar
    h = psi.grid.spacing
    vx = np.asarray(potential(psi.x), dtype=float)
    if rule == "A":
        phi = momentum_transform(psi)
        dens = psi.density
        pd = phi.density
        p = phi.p
        dp = phi.grid.spacing
        p2 = float(np.sum(p**2 * pd) * dp)
        p4 = float(np.sum(p**4 * pd) * dp)
        v1 = float(np.sum(vx * dens) * h)
        v2 = float(np.sum(vx**2 * dens) * h)
        e1 = p2 / (2 * m) + v1
        e2 = p4 / (4 * m**2) + p2 * v1 / m + v2
    elif rule == "B":
        # point-split route: -hbar^2 d^2Z/d(dx)^2 at dx=0 is the Wigner p^2 weight at x
        v = psi.values
        d1 = spectral_derivative(v, h, 1)
        d2 = spectral_derivative(v, h, 2)
        p2_local = -(hbar**2) / 2 * (np.real(np.conj(v) * d2) - np.abs(d1) ** 2)
        p2 = float(np.sum(p2_local) * h)
        p4 = float(np.sum(np.abs(hbar**2 * d2) ** 2) * h)
        v1 = float(np.sum(vx * psi.density) * h)
        v2 = float(np.sum(vx**2 * psi.density) * h)
        e1 = p2 / (2 * m) + v1
        e2 = p4 / (4 * m**2) + float(np.sum(vx * p2_local) * h) / m + v2
    else:
        raise ParameterError(f"rule must be 'A' or 'B', got {rule!r}")
    return (e1, e2 - e1**2) if order == 2 else (e1, None)


# -- closed-form oscillator moments by Gauss-Hermite quadrature --------------

def _eigen_density_on_nodes(n, y):
    """Polynomial factor of ``psi_n(y)**2`` (the Gaussian is the quadrature weight)."""
    m, _, log_scale = hermite_function_parts(n, y)
    return (m * np.exp(log_scale + 0.5 * y * y)) ** 2


def ho_moment(n: int, k: int) -> float:
    """``<y**k>`` of oscillator level ``n`` in dimensionless units (exact quadrature)."""
    rule = gauss_hermite(n + k // 2 + 2)
    y = rule.nodes
    return float(np.sum(rule.weights * y**k * _eigen_density_on_nodes(n, y)))


def _wigner_moment_dimensionless(n, a, b):
    """``<u**a v**b>`` under the closed-form Wigner density of level ``n``.

    In ``u = alpha x``, ``v = p / (hbar alpha)`` the density is
    ``(-1)**n / pi * exp(-(u**2 + v**2)) * L_n(2 (u**2 + v**2))``,
    integrated exactly by a tensor Gauss-Hermite rule.
    """
    rule = gauss_hermite(n + (a + b) // 2 + 2)
    u = rule.nodes[:, None]
    v = rule.nodes[None, :]
    w = rule.weights[:, None] * rule.weights[None, :]
    poly = (-1) ** n / math.pi * laguerre(n, 2 * (u**2 + v**2)) * u**a * v**b
    return float(np.sum(w * poly))


def table1_reference(n: int) -> Tuple[Fraction, ...]:
    """Exact oscillator values of the eight table columns in natural units."""
    h = Fraction(2 * n + 1, 2)
    q = Fraction(2 * n * n + 2 * n + 1, 4)
    return (h, h, h, 3 * q, h * h, q, Fraction(n * n + n + 1, 4), Fraction(1, 4))


def table1(n_max: int, params: OscillatorParams = NATURAL) -> List[DispersionRow]:
    """Expectation table for oscillator levels ``0..n_max`` under both rules.

    Columns shared by the two rules are computed independently from each
    (1-D factorized quadrature for A, 2-D quadrature of the closed-form
    Wigner density for B) and must agree; a disagreement raises
    :class:`ContractError`.
    """
    if int(n_max) != n_max or not 0 <= n_max <= 10:
        raise ParameterError(f"n_max must be an integer in [0, 10], got {n_max!r}")
    m, w, hbar = params.m, params.omega, params.hbar
    xs = 1.0 / params.alpha
    ps = hbar * params.alpha
    rows = []
    for n in range(int(n_max) + 1):
        lat = {k: ho_moment(n, k) for k in (1, 2, 4)}
        a = {
            "x1": xs * lat[1], "x2": xs**2 * lat[2], "x4": xs**4 * lat[4],
            "p1": ps * lat[1], "p2": ps**2 * lat[2], "p4": ps**4 * lat[4],
        }
        a["x2p2"] = a["x2"] * a["p2"]
        wig = lambda i, j: xs**i * ps**j * _wigner_moment_dimensionless(n, i, j)
        b = {
            "x1": wig(1, 0), "x2": wig(2, 0), "x4": wig(4, 0),
            "p1": wig(0, 1), "p2": wig(0, 2), "p4": wig(0, 4), "x2p2": wig(2, 2),
        }
        for key in ("x1", "x2", "x4", "p1", "p2", "p4"):
            if abs(a[key] - b[key]) > AGREEMENT_TOL * max(1.0, abs(a[key])):
                raise ContractError(f"lateral moment {key} disagrees between rules at n={n}")

        def energy(mom):
            e1 = mom["p2"] / (2 * m) + 0.5 * m * w**2 * mom["x2"]
            e2 = mom["p4"] / (4 * m**2) + 0.5 * w**2 * mom["x2p2"] + 0.25 * m**2 * w**4 * mom["x4"]
            return e1, e2 - e1**2

        ea, dea = energy(a)
        eb, deb = energy(b)
        if abs(ea - eb) > AGREEMENT_TOL * max(1.0, abs(ea)):
            raise ContractError(f"mean energy disagrees between rules at n={n}")
        dxdp = math.sqrt(a["x2"] - a["x1"] ** 2) * math.sqrt(a["p2"] - a["p1"] ** 2)
        rows.append(DispersionRow(n, ea, a["x2"], dxdp, a["x4"], a["x2p2"], b["x2p2"], dea, deb))
    return rows
