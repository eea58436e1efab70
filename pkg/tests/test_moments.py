import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qphase.dynamics import Potential
from qphase.errors import AccuracyError, ContractError, ParameterError, UnsupportedDepthError
from qphase.moments import (
    TABLE1_COLUMNS,
    energy_moments,
    ho_moment,
    moment_phase_space,
    moment_rule_A,
    moment_rule_B_pointsplit,
    table1,
    table1_reference,
)
from qphase.phasespace import density_factorized, density_wigner, density_wigner_closed
from qphase.states import (
    Grid1D,
    MomentumWaveFunction,
    OscillatorParams,
    gaussian_packet,
    ho_eigenstate,
    momentum_transform,
    superposition,
)

HARMONIC = Potential.harmonic()


@lru_cache(maxsize=None)
def state(n):
    psi = ho_eigenstate(n, grid=Grid1D.symmetric(max(8.0, 5 * math.sqrt(2 * n + 1)), 801))
    return psi, momentum_transform(psi, Grid1D.symmetric(psi.grid.max, 801))


@lru_cache(maxsize=None)
def rule_a(n):
    return density_factorized(*state(n))


@lru_cache(maxsize=None)
def rule_b(n):
    psi, phi = state(n)
    return density_wigner(psi, phi.grid)


# -- phase-space integration ---------------------------------------------------

def test_phase_space_examples():
    r = moment_phase_space(rule_a(1), 2, 2)
    assert r.value == pytest.approx(9 / 4, abs=1e-7)
    assert r.rule == "A" and r.method == "quadrature-2D" and r.powers == (2, 2)
    assert moment_phase_space(rule_b(2), 2, 2).value == pytest.approx(13 / 4, abs=1e-7)


@pytest.mark.parametrize("n", range(4))
def test_parity_kills_odd_moments(n):
    assert abs(moment_phase_space(rule_a(n), 1, 0).value) < 1e-10
    assert abs(moment_phase_space(rule_b(n), 0, 1).value) < 1e-10


def test_lateral_tag_and_limits():
    assert moment_phase_space(rule_b(0), 0, 4).rule == "lateral"
    with pytest.raises(AccuracyError):
        moment_phase_space(rule_a(0), 5, 4)
    with pytest.raises(ParameterError):
        moment_phase_space(rule_a(0), -1, 0)


def test_under_resolved_grid_is_reported():
    g = Grid1D.symmetric(8.0, 41)
    F = density_wigner_closed(4, xgrid=g, pgrid=g)
    with pytest.raises(AccuracyError):
        moment_phase_space(F, 4, 4)


# -- rule A ------------------------------------------------------------------

@pytest.mark.parametrize("n, expect", [(0, 1 / 4), (3, 49 / 4)])
def test_rule_a_examples(n, expect):
    r = moment_rule_A(*state(n), 2, 2)
    assert r.value == pytest.approx(expect, abs=1e-8)
    assert r.method == "factorized-1D"


@pytest.mark.parametrize("n", range(4))
@pytest.mark.parametrize("k", [1, 2, 4])
def test_rule_a_position_moment_matches_density(n, k):
    a = moment_rule_A(*state(n), k, 0).value
    assert a == pytest.approx(moment_phase_space(rule_a(n), k, 0).value, abs=1e-8)


def test_factorization_identity():
    psi, phi = state(2)
    for nx, mp in ((2, 2), (4, 2), (1, 3), (3, 4)):
        joint = moment_rule_A(psi, phi, nx, mp).value
        split = moment_rule_A(psi, phi, nx, 0).value * moment_rule_A(psi, phi, 0, mp).value
        assert abs(joint - split) < 1e-10


def test_rule_a_requires_fourier_consistency():
    psi, phi = state(1)
    with pytest.raises(ContractError):
        moment_rule_A(psi, MomentumWaveFunction(phi.grid, np.abs(phi.values), phi.params), 0, 2)


# -- rule B by point-splitting ---------------------------------------------------

def test_pointsplit_examples():
    assert moment_rule_B_pointsplit(state(1)[0], 0, 2).value == pytest.approx(1.5, abs=1e-6)
    assert abs(moment_rule_B_pointsplit(state(0)[0], 0, 1).value) < 1e-10
    r = moment_rule_B_pointsplit(state(2)[0], 2, 2)
    assert r.value == pytest.approx(moment_phase_space(rule_b(2), 2, 2).value, abs=1e-5)
    assert r.value == pytest.approx(13 / 4, abs=1e-5)


def test_pointsplit_depth_limit():
    with pytest.raises(UnsupportedDepthError):
        moment_rule_B_pointsplit(state(0)[0], 0, 3)


def test_pointsplit_moving_packet_momentum():
    psi = gaussian_packet(0.0, 1.5, 1 / math.sqrt(2), grid=Grid1D.symmetric(10.0, 801))
    # fourth-order stencils: the error is set by (p0 * step)**4
    r1 = moment_rule_B_pointsplit(psi, 0, 1)
    assert r1.value == pytest.approx(1.5, abs=1e-5)
    assert abs(r1.value - 1.5) < r1.est_error
    assert moment_rule_B_pointsplit(psi, 0, 2).value == pytest.approx(1.5**2 + 0.5, abs=1e-4)


# -- energy moments ------------------------------------------------------------

def test_energy_examples():
    e, de2 = energy_moments(rule_a(2), HARMONIC)
    assert e == pytest.approx(5 / 2, abs=1e-7)
    assert de2 == pytest.approx(7 / 4, abs=1e-6)
    assert energy_moments(rule_b(3), HARMONIC)[1] == pytest.approx(1 / 4, abs=1e-6)
    assert energy_moments(rule_a(2), HARMONIC, order=1) == (pytest.approx(2.5, abs=1e-7), None)


@pytest.mark.parametrize("n", range(7))
def test_rule_a_energy_dispersion_formula(n):
    _, de2 = energy_moments(rule_a(n), HARMONIC)
    assert de2 == pytest.approx((n * n + n + 1) / 4, abs=1e-6)


@pytest.mark.parametrize("n", range(4))
def test_wave_function_routes(n):
    psi, _ = state(n)
    ea, da = energy_moments(psi, HARMONIC, rule="A")
    eb, db = energy_moments(psi, HARMONIC, rule="B")
    assert ea == pytest.approx(n + 0.5, abs=1e-7)
    assert eb == pytest.approx(n + 0.5, abs=1e-7)
    assert da == pytest.approx((n * n + n + 1) / 4, abs=1e-6)
    assert db == pytest.approx(0.25, abs=1e-6)


def test_energy_errors():
    with pytest.raises(AccuracyError):
        energy_moments(rule_a(0), Potential.polynomial([0, 0, 0, 0, 0, 1]))
    with pytest.raises(ParameterError):
        energy_moments(rule_a(0), HARMONIC, order=3)
    with pytest.raises(ParameterError):
        energy_moments(state(0)[0], HARMONIC, rule="C")


def test_energy_of_non_polynomial_potential_on_coarse_grid():
    g = Grid1D.symmetric(8.0, 33)
    F = density_wigner_closed(3, xgrid=g, pgrid=g)
    with pytest.raises(AccuracyError):
        energy_moments(F, lambda x: np.cosh(np.asarray(x)))


# -- table ---------------------------------------------------------------------

def test_table_rows():
    rows = table1(3)
    assert len(rows) == 4
    expect = {
        0: (0.5, 0.5, 0.5, 0.75, 0.25, 0.25, 0.25, 0.25),
        1: (1.5, 1.5, 1.5, 15 / 4, 9 / 4, 5 / 4, 3 / 4, 1 / 4),
        3: (3.5, 3.5, 3.5, 75 / 4, 49 / 4, 25 / 4, 13 / 4, 1 / 4),
    }
    for n, vals in expect.items():
        assert rows[n].values() == pytest.approx(vals, abs=1e-10)
    assert rows[0].x2p2_A == pytest.approx(rows[0].x2p2_B, abs=1e-12)


def test_table_matches_reference_through_ten():
    for row in table1(10):
        ref = table1_reference(row.n)
        assert len(ref) == len(TABLE1_COLUMNS)
        assert max(abs(v - float(r)) for v, r in zip(row.values(), ref)) < 1e-8


def test_reference_fractions():
    assert table1_reference(2) == tuple(Fraction(v) for v in ("5/2", "5/2", "5/2", "39/4", "25/4", "13/4", "7/4", "1/4"))


def test_table_contrasts():
    rows = table1(10)
    assert all(r.dE2_B == pytest.approx(0.25, abs=1e-10) for r in rows)
    a = [r.dE2_A for r in rows]
    assert all(x < y for x, y in zip(a, a[1:]))
    # rule B keeps x-p correlations that rule A drops: 9/4 vs 5/4 at n=1
    assert rows[1].x2p2_A - rows[1].x2p2_B == pytest.approx(1.0, abs=1e-10)
    for r in rows:
        assert r.dxdp == pytest.approx(r.n + 0.5, abs=1e-8)


def test_table_in_explicit_units():
    p = OscillatorParams(2.0, 3.0, 0.5)
    row = table1(2, p)[2]
    assert row.Ebar == pytest.approx(2.5 * p.hbar * p.omega, rel=1e-10)
    assert row.dxdp == pytest.approx(2.5 * p.hbar, rel=1e-10)


def test_table_bounds():
    with pytest.raises(ParameterError):
        table1(11)
    with pytest.raises(ParameterError):
        table1(-1)


def test_ho_moment_closed_form():
    for n in range(6):
        assert ho_moment(n, 2) == pytest.approx(n + 0.5, abs=1e-12)
        assert ho_moment(n, 4) == pytest.approx(3 * (2 * n * n + 2 * n + 1) / 4, abs=1e-11)
        assert abs(ho_moment(n, 3)) < 1e-12


# -- lateral agreement ---------------------------------------------------------

@settings(max_examples=8, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False),
                min_size=1, max_size=4).filter(lambda c: sum(abs(z) for z in c) > 0.1))
def test_lateral_moments_agree(coeffs):
    grid = Grid1D.symmetric(14.0, 561)
    psi = superposition(coeffs, grid=grid)
    phi = momentum_transform(psi, grid)
    fa = density_factorized(psi, phi)
    fb = density_wigner(psi, phi.grid)
    for k in range(1, 5):
        for nx, mp in ((k, 0), (0, k)):
            a = moment_phase_space(fa, nx, mp)
            b = moment_phase_space(fb, nx, mp)
            assert abs(a.value - b.value) < 1e-7
