"""Command-line front end.

Usage:
    qphase table1 --nmax 3
    qphase grid --rule B --n 1 --out wigner1.csv
    qphase moments --n 2
    qphase ehrenfest --potential quartic --lambda 0.1 --tmax 1
    qphase cohen --n 0 --kernel unity
    qphase verify --only positivity,table1

Exit codes: 0 success, 1 usage error, 2 numerical or tolerance failure.
Output is CSV (``#`` key=value header lines, a column line, then rows) or
JSON (``{"meta": ..., "data": {column: values}}``); nothing in it depends on
the clock, so identical arguments give byte-identical files.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .dynamics import Potential, ehrenfest_check, madelung_residuals, propagate
from .errors import ParameterError, QPhaseError
from .moments import TABLE1_COLUMNS, moment_phase_space, table1, table1_reference
from .phasespace import (
    DEFAULT_MIN_COVERAGE,
    cohen_distribution,
    cohen_kernel_factorized,
    default_cohen_grids,
    density_factorized,
    density_wigner,
    unity_kernel,
)
from .states import (
    NATURAL,
    Grid1D,
    OscillatorParams,
    default_half_width,
    gaussian_packet,
    ho_eigenstate,
    momentum_transform,
)
from .verify import SUITES, run_suites

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2
GRID_COUNT = 161
MAX_FRACTION_DENOMINATOR = 8


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad arguments; 2 is reserved for numerical failure here
    def error(self, message):
        raise UsageError(message)


# -- output -------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return str(value)


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    return value


def render(meta: Dict, columns: Sequence[str], rows: Sequence[Sequence], fmt: str) -> str:
    """Serialize a table with its metadata as CSV or JSON text."""
    if fmt == "json":
        data = {c: [_jsonable(r[i]) for r in rows] for i, c in enumerate(columns)}
        return json.dumps({"meta": _jsonable(meta), "data": data}) + "\n"
    buf = io.StringIO()
    for key, value in meta.items():
        if isinstance(value, dict):
            value = json.dumps(_jsonable(value), sort_keys=True)
        elif isinstance(value, (list, tuple)):
            value = json.dumps(_jsonable(value))
        else:
            value = _fmt(value)
        buf.write(f"# {key}={value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _emit(args, meta, columns, rows):
    meta = {"qphase_version": __version__, "command": args.command, **_units_meta(args), **meta}
    text = render(meta, columns, rows, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- shared validation ---------------------------------------------------------

def _params(args) -> OscillatorParams:
    given = {k: getattr(args, k) for k in ("m", "omega", "hbar")}
    if args.units == "natural":
        named = [f"--{k}" for k, v in given.items() if v is not None]
        if named:
            raise UsageError(f"{', '.join(named)} requires --units explicit")
        return NATURAL
    missing = [f"--{k}" for k, v in given.items() if v is None]
    if missing:
        raise UsageError(f"--units explicit requires {', '.join(missing)}")
    for k, v in given.items():
        if not (math.isfinite(v) and v > 0):
            raise UsageError(f"--{k} must be positive and finite, got {v!r}")
    return OscillatorParams(given["m"], given["omega"], given["hbar"])


def _units_meta(args):
    p = args.params
    return {"units": args.units, "m": p.m, "omega": p.omega, "hbar": p.hbar}


def _positive(name, value, allow_zero=False):
    ok = value >= 0 if allow_zero else value > 0
    if not (math.isfinite(value) and ok):
        raise UsageError(f"{name} must be {'non-negative' if allow_zero else 'positive'}, got {value!r}")


def _level(name, value, upper=None):
    if value < 0 or (upper is not None and value > upper):
        bound = f" in [0, {upper}]" if upper is not None else " >= 0"
        raise UsageError(f"{name} must be an integer{bound}, got {value}")


# -- commands ------------------------------------------------------------------

# Expectation-table columns scale with these powers of the oscillator units.
def _column_scales(p: OscillatorParams):
    e, x2, xp = p.hbar * p.omega, p.hbar / (p.m * p.omega), p.hbar
    return (e, x2, xp, x2**2, xp**2, xp**2, e**2, e**2)


def cmd_table1(args) -> int:
    _level("--nmax", args.nmax, 10)
    tol = 1e-8 if args.tol is None else args.tol
    _positive("--tol", tol)
    params = args.params
    scales = _column_scales(params)
    columns = ["n"]
    for name in TABLE1_COLUMNS:
        columns += [name, f"{name}_fraction"]
    columns.append("max_abs_deviation")
    rows = []
    worst = 0.0
    for row in table1(args.nmax, params):
        exact = table1_reference(row.n)
        line = [row.n]
        devs = []
        for value, ref, scale in zip(row.values(), exact, scales):
            reduced = value / scale
            frac = Fraction(reduced).limit_denominator(MAX_FRACTION_DENOMINATOR)
            line += [value, f"{frac.numerator}/{frac.denominator}"]
            devs.append(abs(value - float(ref) * scale))
        line.append(max(devs))
        worst = max(worst, max(devs))
        rows.append(line)
    passed = worst <= tol
    meta = {"nmax": args.nmax, "fractions": "value in oscillator units, denominator <= 8",
            "tol": tol, "max_abs_deviation": worst, "passed": passed}
    _emit(args, meta, columns, rows)
    sys.stderr.write(f"max |computed - exact fraction| = {worst:.3g} (tol {tol:g}): "
                     f"{'PASS' if passed else 'FAIL'}\n")
    return EXIT_OK if passed else EXIT_FAIL


def _grids_for_level(n, params, count, xmax=None, pmax=None):
    half = default_half_width(n, params)
    xgrid = Grid1D.symmetric(xmax if xmax else half, count)
    pgrid = Grid1D.symmetric(pmax if pmax else half * params.hbar * params.alpha**2, count)
    return xgrid, pgrid


def cmd_grid(args) -> int:
    _level("--n", args.n)
    if args.count < 16:
        raise UsageError(f"--count must be at least 16, got {args.count}")
    for flag, v in (("--xmax", args.xmax), ("--pmax", args.pmax)):
        if v is not None:
            _positive(flag, v)
    tol = 1e-6 if args.tol is None else args.tol
    _positive("--tol", tol)
    params = args.params
    xgrid, pgrid = _grids_for_level(args.n, params, args.count, args.xmax, args.pmax)
    if args.rule == "cohen":
        psi = ho_eigenstate(args.n, params)
        if args.kernel == "unity":
            th, ta = default_cohen_grids(psi)
            kernel = unity_kernel(th, ta)
        else:
            kernel = cohen_kernel_factorized(psi)
        F = cohen_distribution(psi, kernel, xgrid, pgrid)
        rule = F.rule
    else:
        psi = ho_eigenstate(args.n, params, xgrid)
        if args.rule == "A":
            F = density_factorized(psi, momentum_transform(psi, pgrid))
        else:
            F = density_wigner(psi, pgrid)
        rule = args.rule
    norm = F.normalization()
    passed = abs(norm - 1) <= tol
    X, P = np.meshgrid(xgrid.points, pgrid.points, indexing="ij")
    rows = np.column_stack([X.ravel(), P.ravel(), F.values.ravel()])
    meta = {
        "rule": rule, "n": args.n, "xgrid": xgrid.as_dict(), "pgrid": pgrid.as_dict(),
        "normalization": norm, "tol": tol, "min_F": float(F.values.min()),
        "max_F": float(F.values.max()), "layout": "row-major, x outer, p inner", "passed": passed,
    }
    _emit(args, meta, ["x", "p", "F"], rows.tolist())
    return EXIT_OK if passed else EXIT_FAIL


def _state(args, params, grid=None):
    if args.state == "packet":
        sigma = args.sigma if args.sigma is not None else math.sqrt(params.hbar / (2 * params.m * params.omega))
        _positive("--sigma", sigma)
        return gaussian_packet(args.x0, args.p0, sigma, params, grid)
    _level("--n", args.n)
    return ho_eigenstate(args.n, params, grid)


def cmd_moments(args) -> int:
    _level("--max-power", args.max_power, 4)
    tol = 1e-7 if args.tol is None else args.tol
    _positive("--tol", tol)
    psi = _state(args, args.params)
    phi = momentum_transform(psi)
    fa = density_factorized(psi, phi)
    fb = density_wigner(psi, phi.grid)
    rows = []
    worst = 0.0
    for nx in range(args.max_power + 1):
        for mp in range(args.max_power + 1):
            a = moment_phase_space(fa, nx, mp)
            b = moment_phase_space(fb, nx, mp)
            lateral = nx == 0 or mp == 0
            if lateral:
                worst = max(worst, abs(a.value - b.value))
            rows.append([nx, mp, a.value, b.value, a.est_error, b.est_error, lateral])
    passed = worst <= tol
    meta = {"state": psi.label, "xgrid": psi.grid.as_dict(), "pgrid": phi.grid.as_dict(),
            "tol": tol, "max_lateral_deviation": worst, "passed": passed}
    _emit(args, meta, ["n_x", "m_p", "rule_A", "rule_B", "est_error_A", "est_error_B", "lateral"], rows)
    return EXIT_OK if passed else EXIT_FAIL


def cmd_ehrenfest(args) -> int:
    params = args.params
    _positive("--dt", args.dt)
    _positive("--tmax", args.tmax)
    _positive("--lambda", args.lam, allow_zero=True)
    tol = 1e-5 if args.tol is None else args.tol
    _positive("--tol", tol)
    coherent = math.sqrt(params.hbar / (2 * params.m * params.omega))
    sigma = coherent if args.sigma is None else args.sigma
    _positive("--sigma", sigma)
    steps = int(round(args.tmax / args.dt))
    if steps < 4:
        raise UsageError("--tmax must cover at least 4 steps of --dt")
    if args.potential == "harmonic":
        V = Potential.harmonic(params.m, params.omega)
    else:
        V = Potential.quartic(args.lam, params.m, params.omega)
    reach = math.hypot(args.x0, args.p0 / (params.m * params.omega)) + 10 * sigma
    half = args.half_width or max(8.0 / params.alpha, reach)
    _positive("--half-width", half)
    count = args.count or int(math.ceil(2 * half * params.alpha / 0.02)) + 1
    grid = Grid1D.symmetric(half, count)
    psi0 = gaussian_packet(args.x0, args.p0, sigma, params, grid)
    snaps = propagate(psi0, V, args.dt, steps)
    rec = ehrenfest_check(snaps, V)

    checks = {
        "residual_ehrenfest_x": float(rec.residual_ehrenfest_x.max()),
        "residual_ehrenfest_p": float(rec.residual_ehrenfest_p.max()),
        "norm_drift": float(np.max(np.abs(rec.norm - 1))),
    }
    bounds = {"residual_ehrenfest_x": tol, "residual_ehrenfest_p": tol, "norm_drift": 1e-10}
    # rigid transport holds only for coherent packets in a harmonic well
    transport_asserted = args.potential == "harmonic" and abs(sigma - coherent) <= 1e-12 * coherent
    checks["residual_continuity"] = float(rec.residual_continuity.max())
    checks["residual_transport"] = float(rec.residual_transport.max())
    if transport_asserted:
        bounds["residual_continuity"] = 1e-3
        bounds["residual_transport"] = 1e-3
    meta = {
        "potential": V.describe(), "x0": args.x0, "p0": args.p0, "sigma": sigma, "dt": args.dt,
        "steps": steps, "grid": grid.as_dict(), "tol": tol,
        "min_force_gap": float(np.min(np.abs(rec.force_mean - rec.force_at_mean))),
        "max_force_gap": float(np.max(np.abs(rec.force_mean - rec.force_at_mean))),
    }
    if args.madelung:
        eq6, eq7 = madelung_residuals(snaps, V)
        checks["madelung_continuity"] = eq6
        checks["madelung_quantum_hj"] = eq7
    passed = all(checks[k] <= b for k, b in bounds.items())
    meta.update({f"max_{k}": v for k, v in checks.items()})
    meta["asserted"] = sorted(bounds)
    meta["passed"] = passed
    _emit(args, meta, list(rec.COLUMNS), rec.rows().tolist())
    return EXIT_OK if passed else EXIT_FAIL


def cmd_cohen(args) -> int:
    tol = 1e-5 if args.tol is None else args.tol
    _positive("--tol", tol)
    if not 0 < args.min_coverage <= 1:
        raise UsageError(f"--min-coverage must lie in (0, 1], got {args.min_coverage}")
    params = args.params
    psi = _state(args, params)
    phi = momentum_transform(psi)
    if args.kernel == "unity":
        th, ta = default_cohen_grids(psi)
        kernel = unity_kernel(th, ta)
        reference = density_wigner(psi, phi.grid)
    else:
        kernel = cohen_kernel_factorized(psi)
        reference = density_factorized(psi, phi)
    meta = {"state": psi.label, "kernel": kernel.kernel_id, "epsilon": kernel.epsilon,
            "coverage": kernel.coverage, "mask_fraction": kernel.mask_fraction,
            "masked_zeros": int(kernel.mask.size - kernel.mask.sum()),
            "thetagrid": kernel.thetagrid.as_dict(), "taugrid": kernel.taugrid.as_dict(), "tol": tol}
    covered = kernel.coverage >= args.min_coverage
    if covered:
        F = cohen_distribution(psi, kernel, pgrid=phi.grid, min_coverage=args.min_coverage)
        dev = float(np.max(np.abs(F.values - reference.values)))
        meta["roundtrip_reference"] = reference.rule
        meta["roundtrip_max_deviation"] = dev
        passed = dev <= tol
    else:
        sys.stderr.write(f"kernel coverage {kernel.coverage:.6f} below {args.min_coverage:g}\n")
        passed = False
    meta["passed"] = passed
    TH, TA = np.meshgrid(kernel.thetagrid.points, kernel.taugrid.points, indexing="ij")
    vals = kernel.values
    rows = np.column_stack([TH.ravel(), TA.ravel(), vals.real.ravel(), vals.imag.ravel(),
                            kernel.mask.ravel().astype(float)])
    _emit(args, meta, ["theta", "tau", "re_f", "im_f", "mask"], rows.tolist())
    return EXIT_OK if passed else EXIT_FAIL


def cmd_verify(args) -> int:
    only = None
    if args.only:
        only = [s.strip() for chunk in args.only for s in chunk.split(",") if s.strip()]
        unknown = [s for s in only if s not in SUITES]
        if unknown:
            raise UsageError(f"--only: unknown suite(s) {', '.join(unknown)}; choose from {', '.join(SUITES)}")
    results = run_suites(only, seed=args.seed)
    passed = all(r.passed for r in results)
    rows = [[r.suite, r.name, r.passed, r.detail] for r in results]
    meta = {"seed": args.seed, "suites": only or list(SUITES), "checks": len(results),
            "failed": sum(not r.passed for r in results), "passed": passed}
    _emit(args, meta, ["suite", "check", "passed", "detail"], rows)
    for r in results:
        sys.stderr.write(f"{'PASS' if r.passed else 'FAIL'} {r.suite}/{r.name}: {r.detail}\n")
    return EXIT_OK if passed else EXIT_FAIL


# -- parser --------------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = _Parser(add_help=False)
    p.add_argument("--units", choices=("natural", "explicit"), default="natural")
    p.add_argument("--m", type=float)
    p.add_argument("--omega", type=float)
    p.add_argument("--hbar", type=float)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--tol", type=float)
    p.add_argument("--seed", type=int, default=0)
    return p


def _state_flags(p, default_state="ho"):
    p.add_argument("--state", choices=("ho", "packet"), default=default_state)
    p.add_argument("--n", type=int, default=0, help="oscillator level (for --state ho)")
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--p0", type=float, default=0.0)
    p.add_argument("--sigma", type=float, help="packet width (default: coherent width)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qphase", description="Phase-space densities for 1-D quantum states.")
    parser.add_argument("--version", action="version", version=f"qphase {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _common()

    p = sub.add_parser("table1", parents=[common], help="oscillator expectation table under both rules")
    p.add_argument("--nmax", type=int, default=3)
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("grid", parents=[common], help="density samples (x, p, F) for a level")
    p.add_argument("--rule", choices=("A", "B", "cohen"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--kernel", choices=("factorized", "unity"), default="factorized",
                   help="Cohen kernel for --rule cohen")
    p.add_argument("--count", type=int, default=GRID_COUNT, help="points per axis")
    p.add_argument("--xmax", type=float)
    p.add_argument("--pmax", type=float)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("moments", parents=[common], help="<x^a p^b> under rules A and B")
    _state_flags(p)
    p.add_argument("--max-power", type=int, default=4)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("ehrenfest", parents=[common], help="propagate a packet and check expectations")
    p.add_argument("--potential", choices=("harmonic", "quartic"), default="harmonic")
    p.add_argument("--lambda", dest="lam", type=float, default=0.1, help="quartic coefficient")
    p.add_argument("--x0", type=float, default=1.0)
    p.add_argument("--p0", type=float, default=0.0)
    p.add_argument("--sigma", type=float, help="packet width (default: coherent width)")
    p.add_argument("--tmax", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--half-width", type=float)
    p.add_argument("--count", type=int)
    p.add_argument("--madelung", action="store_true", help="also report the polar-form residuals")
    p.set_defaults(func=cmd_ehrenfest)

    p = sub.add_parser("cohen", parents=[common], help="Cohen kernel grid and round-trip report")
    _state_flags(p)
    p.add_argument("--kernel", choices=("factorized", "unity"), default="factorized")
    p.add_argument("--min-coverage", type=float, default=DEFAULT_MIN_COVERAGE)
    p.set_defaults(func=cmd_cohen)

    p = sub.add_parser("verify", parents=[common], help="run the invariant suites")
    p.add_argument("--only", action="append", metavar="SUITE[,SUITE]",
                   help=f"subset of: {', '.join(SUITES)}")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.tol is not None and not (math.isfinite(args.tol) and args.tol > 0):
            raise UsageError(f"--tol must be positive, got {args.tol!r}")
        args.params = _params(args)
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"qphase: usage error: {exc}\n")
        return EXIT_USAGE
    except ParameterError as exc:
        sys.stderr.write(f"qphase: invalid parameter: {exc}\n")
        return EXIT_USAGE
    except QPhaseError as exc:
        sys.stderr.write(f"qphase: {type(exc).__name__}: {exc}\n")
        return EXIT_FAIL
    except OSError as exc:
        sys.stderr.write(f"qphase: cannot write output: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
