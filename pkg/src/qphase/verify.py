"""Invariant suites run by ``qphase verify``.

Each check returns ``(passed, detail)``. Randomized state choices draw from a
single ``numpy.random.Generator`` seeded by the caller, so a given seed always
reproduces the same report.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .dynamics import Potential, ehrenfest_check, madelung_residuals, propagate
from .moments import moment_phase_space, table1, table1_reference
from .phasespace import (
    cohen_distribution,
    cohen_kernel_factorized,
    density_factorized,
    density_wigner,
    density_wigner_closed,
    liouville_residual,
    unity_kernel,
    default_cohen_grids,
)
from .specfun import gauss_hermite, hermite_scaled
from .states import (
    Grid1D,
    default_xgrid,
    gaussian_packet,
    ho_eigenstate,
    madelung_decompose,
    momentum_transform,
    superposition,
)

__all__ = ["CheckResult", "SUITES", "run_suites"]

Check = Callable[[np.random.Generator], Tuple[bool, str]]


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    detail: str
    seconds: float


def _random_superposition(rng, n_max=4, grid=None):
    coeffs = rng.normal(size=n_max + 1) + 1j * rng.normal(size=n_max + 1)
    return superposition(coeffs, grid=grid or default_xgrid(6))


def _random_packet(rng, grid=None):
    x0, p0 = rng.uniform(-1.0, 1.0, size=2)
    sigma = rng.uniform(0.6, 0.9)
    return gaussian_packet(float(x0), float(p0), float(sigma), grid=grid)


def _quadrature_exactness(rng):
    worst = 0.0
    for order in (5, 20, 60, 200):
        rule = gauss_hermite(order)
        for k in range(0, min(2 * order - 1, 40) + 1, 2):
            exact = math.gamma((k + 1) / 2)
            got = float(np.sum(rule.weights * rule.nodes**k))
            worst = max(worst, abs(got - exact) / exact)
    return worst < 1e-12, f"max relative error {worst:.3g}"


def _hermite_orthonormality(rng):
    rule = gauss_hermite(40)
    y = rule.nodes
    basis = np.array([hermite_scaled(n, y) * np.exp(0.5 * y * y) for n in range(21)])
    gram = (basis * rule.weights) @ basis.T
    err = float(np.max(np.abs(gram - np.eye(21))))
    return err < 1e-12, f"max |<n|m> - delta| {err:.3g}"


def _state_norms(rng):
    worst = 0.0
    for n in range(11):
        psi = ho_eigenstate(n)
        phi = momentum_transform(psi)
        worst = max(worst, abs(psi.norm() - 1), abs(float(np.sum(phi.density) * phi.grid.spacing) - 1))
    return worst < 1e-8, f"max norm deviation {worst:.3g}"


def _madelung_roundtrip(rng):
    psi = _random_superposition(rng)
    fields = madelung_decompose(psi)
    err = float(np.max(np.abs(fields.reconstruct() - psi.values)))
    return err < 1e-10, f"max |R exp(iS/hbar) - psi| {err:.3g}"


def _positivity(rng):
    worst = 0.0
    for n in range(11):
        psi = ho_eigenstate(n)
        F = density_factorized(psi, momentum_transform(psi)).values
        worst = min(worst, float(F.min() / F.max()))
    grid = Grid1D.symmetric(8.0, 801)
    origin = []
    for n in range(1, 10, 2):
        psi = ho_eigenstate(n, grid=Grid1D.symmetric(max(8.0, 5 * math.sqrt(2 * n + 1)), 801))
        pg = Grid1D.symmetric(8.0, 801)
        origin.append(abs(density_wigner(psi, pg).values[400, 400] + 1 / math.pi))
    ok = worst >= -1e-15 and max(origin) < 1e-8
    return ok, f"min F_A/max F_A {worst:.3g}; max |F_B(0,0) + 1/pi| over odd n {max(origin):.3g}"


def _marginals(rng):
    psi = _random_superposition(rng)
    phi = momentum_transform(psi)
    fa = density_factorized(psi, phi)
    fb = density_wigner(psi, phi.grid)
    errs = [
        np.max(np.abs(F.x_marginal() - psi.density)) for F in (fa, fb)
    ] + [np.max(np.abs(F.p_marginal() - phi.density)) for F in (fa, fb)]
    err = float(max(errs))
    return err < 1e-7, f"max marginal deviation {err:.3g}"


def _lateral(rng):
    worst = 0.0
    for _ in range(2):
        psi = _random_superposition(rng)
        phi = momentum_transform(psi)
        fa = density_factorized(psi, phi)
        fb = density_wigner(psi, phi.grid)
        for k in range(1, 5):
            for nx, mp in ((k, 0), (0, k)):
                a = moment_phase_space(fa, nx, mp).value
                b = moment_phase_space(fb, nx, mp).value
                worst = max(worst, abs(a - b))
    return worst < 1e-7, f"max |A - B| over lateral moments {worst:.3g}"


def _table(rng):
    worst = 0.0
    for row in table1(10):
        ref = table1_reference(row.n)
        worst = max(worst, max(abs(v - float(r)) for v, r in zip(row.values(), ref)))
    return worst < 1e-8, f"max deviation from exact fractions {worst:.3g}"


def _wigner_routes(rng):
    worst = 0.0
    for n in range(7):
        psi = ho_eigenstate(n)
        fb = density_wigner(psi, momentum_transform(psi).grid)
        closed = density_wigner_closed(n, xgrid=fb.xgrid, pgrid=fb.pgrid)
        worst = max(worst, float(np.max(np.abs(fb.values - closed.values))))
    return worst < 1e-6, f"max |transform - closed form| {worst:.3g}"


def _liouville(rng):
    ratios = []
    for n in range(4):
        psi = ho_eigenstate(n, grid=Grid1D.symmetric(max(8.0, 5 * math.sqrt(2 * n + 1)), 1601))
        V = Potential.harmonic()
        ratios.append(liouville_residual(psi, V, 0.08) / liouville_residual(psi, V, 0.04))
    ok = all(3.5 <= r <= 4.5 for r in ratios)
    return ok, "ratios " + ", ".join(f"{r:.4f}" for r in ratios)


def _cohen(rng):
    psi = ho_eigenstate(0)
    th, ta = default_cohen_grids(psi)
    phi = momentum_transform(psi)
    wig = density_wigner(psi, phi.grid)
    unity = cohen_distribution(psi, unity_kernel(th, ta), pgrid=phi.grid)
    e1 = float(np.max(np.abs(unity.values - wig.values)))
    worst = 0.0
    for state in (psi, _random_packet(rng, default_xgrid(0))):
        ph = momentum_transform(state)
        kernel = cohen_kernel_factorized(state)
        F = cohen_distribution(state, kernel, pgrid=ph.grid)
        worst = max(worst, float(np.max(np.abs(F.values - density_factorized(state, ph).values))))
    ok = e1 < 1e-5 and worst < 1e-5
    return ok, f"unity vs Wigner {e1:.3g}; factorized kernel round trip {worst:.3g}"


def _dynamics(rng):
    grid = Grid1D.symmetric(9.0, 901)
    V = Potential.harmonic()
    psi0 = _random_packet(rng, grid)
    snaps = propagate(psi0, V, 1e-3, 1000)
    rec = ehrenfest_check(snaps, V)
    drift = float(np.max(np.abs(rec.norm - 1)))
    ex = float(rec.residual_ehrenfest_x.max())
    ep = float(rec.residual_ehrenfest_p.max())
    ok = drift < 1e-10 and ex < 1e-5 and ep < 1e-5
    return ok, f"norm drift {drift:.3g}; Ehrenfest residuals x {ex:.3g}, p {ep:.3g}"


def _hydrodynamic_order(rng):
    V = Potential.harmonic()
    sigma = 1 / math.sqrt(2)
    x0, p0 = (float(v) for v in rng.uniform(-1.0, 1.0, size=2))
    out = []
    for dt, h in ((1e-3, 0.01), (5e-4, 0.005)):
        grid = Grid1D.symmetric(9.0, int(round(18 / h)) + 1)
        snaps = propagate(gaussian_packet(x0, p0, sigma, grid=grid), V, dt, int(round(0.5 / dt)))
        rec = ehrenfest_check(snaps, V)
        out.append((rec.residual_continuity.max(), rec.residual_transport.max(), *madelung_residuals(snaps, V)))
    ratios = [a / b for a, b in zip(*out)]
    ok = all(3.5 <= r <= 4.5 for r in ratios) and max(out[0]) < 1e-3
    return ok, "halving ratios " + ", ".join(f"{r:.3f}" for r in ratios)


SUITES: Dict[str, List[Tuple[str, Check]]] = {
    "quadrature": [("exactness", _quadrature_exactness), ("orthonormality", _hermite_orthonormality)],
    "states": [("normalization", _state_norms), ("madelung", _madelung_roundtrip)],
    "positivity": [("positivity", _positivity)],
    "marginals": [("marginals", _marginals), ("lateral", _lateral)],
    "table1": [("table1", _table)],
    "wigner": [("routes", _wigner_routes)],
    "liouville": [("order", _liouville)],
    "cohen": [("round-trip", _cohen)],
    "dynamics": [("ehrenfest", _dynamics), ("hydrodynamic-order", _hydrodynamic_order)],
}


def run_suites(only: Optional[Sequence[str]] = None, seed: int = 0) -> List[CheckResult]:
    """Run the named suites (all by default) in a fixed order."""
    names = list(SUITES) if not only else list(only)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise KeyError(f"unknown suite(s): {', '.join(unknown)}; choose from {', '.join(SUITES)}")
    rng = np.random.default_rng(seed)
    results = []
    for suite in names:
        for name, check in SUITES[suite]:
            start = time.perf_counter()
            passed, detail = check(rng)
            results.append(CheckResult(suite, name, bool(passed), detail, time.perf_counter() - start))
    return results
