"""Command-line front end.

Subcommands write CSV (17 significant digits, header row, ``\\n`` line
endings) either to ``--out`` or to stdout. Exit codes: 0 success,
1 validation error, 2 numeric failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import itertools
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .darboux import TransformSeed, special_phase_a, transformed_drive, transformed_solution
from .errors import NumericalError, RabiDarbouxError, ValidationError
from .observables import detuning_trace, envelope_minimum, oscillation_frequencies
from .susy import all_residuals, intertwining_residual, random_seeds
from .twolevel import (
    GROUND,
    Constant,
    DriveParams,
    MonotoneLimit,
    Oscillatory,
    Tabulated,
    TimeGrid,
    evolve,
    norm_drift,
    probability,
    rabi_probability,
)

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3
SWEEP_BUDGET = 100_000
JOBS_ENV = "RABI_DARBOUX_JOBS"

DEFAULTS = {
    "f0": 1.0,
    "t1": 40.0,
    "n": 4001,
    "tol": 1e-10,
    "a": "0",
    "B": 1.0,
    "seed_count": 100,
    "seed": 0,
}


# --------------------------------------------------------------------------
# CSV
# --------------------------------------------------------------------------


def format_number(x: float) -> str:
    return format(float(x), ".17g")


def csv_text(header: Sequence[str], columns: Sequence[Sequence]) -> str:
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(v if isinstance(v, str) else format_number(v) for v in row))
    return "\n".join(lines) + "\n"


def write_csv(path: Optional[str], header, columns) -> None:
    text = csv_text(header, columns)
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# --------------------------------------------------------------------------
# Configuration
# --------------------------------------------------------------------------


def read_config_file(path: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


@dataclass
class RunConfig:
    command: str
    f0: float
    xi: Optional[float]
    omega0: Optional[float]
    varpi: Optional[float]
    a: str
    B: float
    t1: float
    n: int
    tol: float
    out: Optional[str]
    jobs: int
    seed_count: int
    seed: int
    ode: bool = False
    inject_fault: bool = False
    drive: Optional[str] = None
    table: Optional[str] = None
    figure_id: Optional[str] = None
    varpi_list: Optional[str] = None
    a_list: Optional[str] = None
    omega0_list: Optional[str] = None

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(0.0, self.t1, self.n)

    def coupling(self) -> float:
        """``xi``, derived from ``omega0`` via ``omega0^2 = f0^2 + xi^2`` if needed."""
        if self.xi is not None and self.omega0 is not None:
            raise ValidationError("give exactly one of --xi / --omega0")
        if self.xi is None and self.omega0 is None:
            raise ValidationError("one of --xi / --omega0 is required")
        if self.xi is not None:
            return self.xi
        return xi_from_omega0(self.f0, self.omega0)

    def phase(self, varpi: float) -> float:
        return parse_phase(self.a, self.f0, varpi)


def xi_from_omega0(f0: float, omega0: float) -> float:
    if not omega0 > abs(f0):
        raise ValidationError(f"omega0 must exceed |f0| (got omega0={omega0}, f0={f0})")
    return math.sqrt(omega0 * omega0 - f0 * f0)


def parse_phase(text, f0: float, varpi: float) -> float:
    """Phase ``a`` from a number or the token ``special``."""
    if isinstance(text, (int, float)):
        return float(text)
    if text.strip().lower() == "special":
        return special_phase_a(f0, varpi)
    return _float(text, "a")


def _float(text, name):
    try:
        return float(text)
    except (TypeError, ValueError):
        raise ValidationError(f"{name}: expected a number, got {text!r}") from None


def _int(text, name):
    try:
        return int(text)
    except (TypeError, ValueError):
        raise ValidationError(f"{name}: expected an integer, got {text!r}") from None


def default_jobs() -> int:
    env = os.environ.get(JOBS_ENV)
    if env:
        return _int(env, JOBS_ENV)
    return os.cpu_count() or 1


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge flags over an optional config file over defaults."""
    file_values = read_config_file(args.config) if args.config else {}
    flags = {k: v for k, v in vars(args).items() if v is not None}

    # either coupling flag overrides both file keys
    if "xi" in flags or "omega0" in flags:
        file_values.pop("xi", None)
        file_values.pop("omega0", None)

    def pick(key, conv, default=None):
        if key in flags:
            return conv(flags[key], key) if conv else flags[key]
        if key in file_values:
            return conv(file_values[key], key) if conv else file_values[key]
        return default

    jobs = pick("jobs", _int)
    cfg = RunConfig(
        command=args.command,
        f0=pick("f0", _float, DEFAULTS["f0"]),
        xi=pick("xi", _float),
        omega0=pick("omega0", _float),
        varpi=pick("varpi", _float),
        a=str(pick("a", None, DEFAULTS["a"])),
        B=pick("B", _float, DEFAULTS["B"]),
        t1=pick("t1", _float, DEFAULTS["t1"]),
        n=pick("n", _int, DEFAULTS["n"]),
        tol=pick("tol", _float, DEFAULTS["tol"]),
        out=pick("out", None),
        jobs=jobs if jobs is not None else default_jobs(),
        seed_count=pick("seed_count", _int, DEFAULTS["seed_count"]),
        seed=pick("seed", _int, DEFAULTS["seed"]),
        ode=bool(flags.get("ode", False)),
        inject_fault=bool(flags.get("inject_fault", False)),
        drive=pick("drive", None),
        table=pick("table", None),
        figure_id=flags.get("figure_id"),
        varpi_list=pick("varpi_list", None),
        a_list=pick("a_list", None),
        omega0_list=pick("omega0_list", None),
    )
    if cfg.jobs < 1:
        raise ValidationError("--jobs must be >= 1")
    return cfg


# --------------------------------------------------------------------------
# Drive construction
# --------------------------------------------------------------------------


def read_table(path: str) -> Tabulated:
    """Tabulated drive from a CSV with a header row and columns ``t, f``."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] < 2:
        raise ValidationError(f"{path}: need two columns t,f")
    return Tabulated(data[:, 0], data[:, 1])


def build_drive(cfg: RunConfig):
    kind = cfg.drive or "constant"
    if kind == "constant":
        return Constant(cfg.f0)
    if kind == "monotone":
        return MonotoneLimit(cfg.f0)
    if kind == "oscillatory":
        if cfg.varpi is None:
            raise ValidationError("oscillatory drive needs --varpi")
        return Oscillatory(cfg.f0, cfg.varpi, cfg.phase(cfg.varpi))
    if kind == "tabulated":
        if not cfg.table:
            raise ValidationError("tabulated drive needs --table FILE")
        return read_table(cfg.table)
    raise ValidationError(f"unknown drive {kind!r}")


def build_seed(cfg: RunConfig) -> TransformSeed:
    varpi = cfg.varpi or 0.0
    a = cfg.phase(varpi) if varpi > 0 else 0.0
    return TransformSeed(f0=cfg.f0, varpi=varpi, a=a, B=cfg.B)


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def cmd_rabi(cfg: RunConfig) -> int:
    xi = cfg.coupling()
    t = cfg.grid.times
    header, cols = ["t", "P"], [t, rabi_probability(xi, cfg.f0, t)]
    if cfg.ode:
        trace = evolve(DriveParams(xi, Constant(cfg.f0)), GROUND, cfg.grid, cfg.tol)
        header.append("P_ode")
        cols.append(probability(trace).values)
    write_csv(cfg.out, header, cols)
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    xi = cfg.coupling()
    trace = evolve(DriveParams(xi, build_drive(cfg)), GROUND, cfg.grid, cfg.tol)
    a1, a2 = trace.values[:, 0], trace.values[:, 1]
    write_csv(
        cfg.out,
        ["t", "a1_re", "a1_im", "a2_re", "a2_im", "P"],
        [trace.times, a1.real, a1.imag, a2.real, a2.imag, probability(trace).values],
    )
    return EXIT_OK


def cmd_transform(cfg: RunConfig) -> int:
    xi = cfg.coupling()
    seed = build_seed(cfg)
    trace = transformed_solution(seed, xi, GROUND, cfg.grid)
    write_csv(cfg.out, ["t", "P1", "f1"], [trace.times, probability(trace).values, transformed_drive(seed, trace.times)])
    return EXIT_OK


def cmd_detuning(cfg: RunConfig) -> int:
    drive = build_drive(cfg)
    det = detuning_trace(drive, cfg.grid)
    write_csv(cfg.out, ["t", "f1", "delta1"], [det.times, drive(det.times), det.delta])
    return EXIT_OK


@dataclass(frozen=True)
class Curve:
    label: str
    quantity: str  # "P1" or "delta1"
    varpi: float
    a: float
    omega0: float = 2.0
    f0: float = 1.0


def _osc_curves(quantity, pairs, omega0=2.0):
    return [Curve(label, quantity, varpi, a, omega0) for label, varpi, a in pairs]


FIGURES = {
    "fig1a": _osc_curves("P1", [("varpi_1-4", 0.25, 0.015), ("varpi_1-6", 1 / 6, 0.015)]),
    "fig1b": _osc_curves(
        "delta1", [("varpi_1-4", 0.25, 0.015), ("varpi_1-6", 1 / 6, 0.015), ("varpi_1e-3", 1e-3, 1e-6)]
    ),
    "fig2a": _osc_curves("P1", [("a_0", 0.2, 0.0), ("a_0.02", 0.2, 0.02), ("a_0.08", 0.2, 0.08)]),
    "fig2b": _osc_curves("delta1", [("a_0", 0.2, 0.0), ("a_0.02", 0.2, 0.02), ("a_0.08", 0.2, 0.08)]),
    "fig3": [
        Curve("omega0_2", "P1", 0.2, 0.0, 2.0),
        Curve("omega0_1.6", "P1", 0.2, 0.0, 1.6),
        Curve("omega0_1.2", "P1", 0.2, 0.0, 1.2),
    ],
}


def figure_curve(curve: Curve, grid: TimeGrid):
    """``(column name, times, values)`` for one curve of a figure."""
    if curve.quantity == "P1":
        seed = TransformSeed(curve.f0, curve.varpi, curve.a)
        xi = xi_from_omega0(curve.f0, curve.omega0)
        trace = transformed_solution(seed, xi, GROUND, grid)
        return "P1", trace.times, probability(trace).values
    det = detuning_trace(Oscillatory(curve.f0, curve.varpi, curve.a), grid)
    return "delta1", det.times, det.delta


def cmd_figure(cfg: RunConfig) -> int:
    fig = cfg.figure_id
    if fig not in FIGURES:
        raise ValidationError(f"unknown figure {fig!r}; choose from {', '.join(FIGURES)}")
    out_dir = Path(cfg.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    for curve in FIGURES[fig]:
        name, t, values = figure_curve(curve, cfg.grid)
        path = out_dir / f"{fig}_{curve.label}.csv"
        write_csv(str(path), ["t", name], [t, values])
        print(path)
    return EXIT_OK


IDENTITY_TOL = 1e-8


def _oracle_checks(tol: float):
    """Closed-form versus integrator comparisons: ``(name, error, threshold)``."""
    rows = []
    f0, xi = 1.0, math.sqrt(3.0)
    omega = 2.0
    grid = TimeGrid(0.0, 20.0 / omega, 2001)
    trace = evolve(DriveParams(xi, Constant(f0)), GROUND, grid, tol)
    rows.append(("rabi closed form vs ode", float(np.max(np.abs(probability(trace).values - rabi_probability(xi, f0, grid.times)))), 1e-8))
    rows.append(("rabi norm drift", norm_drift(trace), 100 * tol))

    grid = TimeGrid(0.0, 20.0, 2001)
    t = grid.times
    eq26 = 3 * f0**2 * t**2 / (1 + 4 * f0**2 * t**2)
    ode = probability(evolve(DriveParams(xi, MonotoneLimit(f0)), GROUND, grid, tol)).values
    darb = probability(transformed_solution(TransformSeed(f0), xi, GROUND, grid)).values
    rows.append(("monotone ode vs closed form", float(np.max(np.abs(ode - eq26))), 1e-6))
    rows.append(("monotone darboux vs closed form", float(np.max(np.abs(darb - eq26))), 1e-10))

    seed = TransformSeed(1.0, 0.25, 0.015)
    ode = probability(evolve(DriveParams(xi, Oscillatory(1.0, 0.25, 0.015)), GROUND, grid, tol)).values
    darb = probability(transformed_solution(seed, xi, GROUND, grid)).values
    rows.append(("oscillatory darboux vs ode", float(np.max(np.abs(ode - darb))), 1e-6))
    return rows


def cmd_verify(cfg: RunConfig) -> int:
    rng = np.random.default_rng(cfg.seed)
    worst = {}
    failures = []
    for k, (seed, xi) in enumerate(random_seeds(cfg.seed_count, rng)):
        reports = all_residuals(seed, xi)
        if cfg.inject_fault:
            reports[0] = intertwining_residual(seed, xi, w1_shift=1e-3)
        for rep in reports:
            if rep.identity not in worst or rep.max_abs > worst[rep.identity][0]:
                worst[rep.identity] = (rep.max_abs, k)
            if not rep.passed(IDENTITY_TOL):
                failures.append(
                    f"{rep.identity}: seed #{k} (f0={seed.f0:.6g}, varpi={seed.varpi:.6g}, "
                    f"a={seed.a:.6g}, xi={xi:.6g}) max|res|={rep.max_abs:.3e}"
                )

    print(f"{'check':<34s} {'max residual':>14s} {'threshold':>10s}  status")
    for name, (value, k) in worst.items():
        ok = value <= IDENTITY_TOL
        print(f"{name + ' (worst seed #' + str(k) + ')':<34s} {value:14.3e} {IDENTITY_TOL:10.0e}  {'ok' if ok else 'FAIL'}")
    for name, value, threshold in _oracle_checks(cfg.tol):
        ok = value <= threshold
        print(f"{name:<34s} {value:14.3e} {threshold:10.0e}  {'ok' if ok else 'FAIL'}")
        if not ok:
            failures.append(f"{name}: {value:.3e} > {threshold:.0e}")
    if failures:
        print("\nFAILED:", file=sys.stderr)
        for line in failures:
            print("  " + line, file=sys.stderr)
        return EXIT_NUMERIC
    print(f"\nall checks passed ({cfg.seed_count} random seeds)")
    return EXIT_OK


def _parse_list(text: Optional[str], name: str, allow_special: bool = False):
    if not text:
        raise ValidationError(f"sweep needs a non-empty --{name.replace('_', '-')}")
    items = [s.strip() for s in str(text).split(",") if s.strip()]
    if not items:
        raise ValidationError(f"sweep needs a non-empty --{name.replace('_', '-')}")
    if allow_special:
        return [s if s.lower() == "special" else _float(s, name) for s in items]
    return [_float(s, name) for s in items]


SWEEP_HEADER = ["varpi", "a", "omega0", "xi", "fast", "slow", "fast_amplitude", "slow_amplitude", "floor", "minimum"]


def sweep_point(f0: float, varpi: float, a, omega0: float, t1: float, dt: float) -> list:
    """One sweep row; the floor is taken over the last slow period ``pi / varpi``."""
    a_val = parse_phase(a, f0, varpi)
    xi = xi_from_omega0(f0, omega0)
    slow_period = math.pi / varpi
    t_end = max(t1, 3.0 * slow_period)
    n = int(round(t_end / dt)) + 1
    trace = transformed_solution(TransformSeed(f0, varpi, a_val), xi, GROUND, TimeGrid(0.0, t_end, n))
    p = probability(trace)
    est = oscillation_frequencies(p)
    fast_period = est.fast_period if not est.flat else math.pi / omega0
    env = envelope_minimum(p, 1.1 * fast_period, start=t_end - slow_period, stop=t_end)
    return [varpi, a_val, omega0, xi, est.fast, est.slow, est.fast_amplitude, est.slow_amplitude, env.floor, env.minimum]


def _sweep_task(args):
    return sweep_point(*args)


def run_sweep(f0, varpis, phases, omega0s, t1, dt, jobs=1) -> list[list]:
    points = list(itertools.product(varpis, phases, omega0s))
    if len(points) > SWEEP_BUDGET:
        raise ValidationError(f"sweep has {len(points)} points, budget is {SWEEP_BUDGET}")
    tasks = [(f0, v, a, o, t1, dt) for v, a, o in points]
    if jobs == 1 or len(tasks) == 1:
        return [_sweep_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        # map preserves submission order, so rows come out deterministically
        return list(pool.map(_sweep_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


def cmd_sweep(cfg: RunConfig) -> int:
    varpis = _parse_list(cfg.varpi_list, "varpi_list")
    phases = _parse_list(cfg.a_list or cfg.a, "a_list", allow_special=True)
    omega0s = _parse_list(cfg.omega0_list, "omega0_list")
    rows = run_sweep(cfg.f0, varpis, phases, omega0s, cfg.t1, cfg.t1 / (cfg.n - 1), cfg.jobs)
    write_csv(cfg.out, SWEEP_HEADER, list(zip(*rows)) if rows else [[] for _ in SWEEP_HEADER])
    return EXIT_OK


COMMANDS = {
    "rabi": cmd_rabi,
    "simulate": cmd_simulate,
    "transform": cmd_transform,
    "detuning": cmd_detuning,
    "figure": cmd_figure,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
}


# --------------------------------------------------------------------------
# Argument parsing
# --------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key=value file; flags take precedence")
    common.add_argument("--f0", type=float, help="constant drive f0 (default 1)")
    coupling = common.add_mutually_exclusive_group()
    coupling.add_argument("--xi", type=float, help="coupling xi (half the Rabi frequency)")
    coupling.add_argument("--omega0", type=float, help="sqrt(f0^2 + xi^2); alternative to --xi")
    common.add_argument("--varpi", type=float, help="oscillation frequency of the transformation")
    common.add_argument("--a", help="phase a, or 'special' for the monotone-limit phase")
    common.add_argument("--B", type=float, help="offset B of psi = A t + B (varpi = 0)")
    common.add_argument("--t1", type=float, help="end time (default 40)")
    common.add_argument("--n", type=int, help="number of samples (default 4001)")
    common.add_argument("--tol", type=float, help="integrator relative tolerance (default 1e-10)")
    common.add_argument("--out", help="output file (directory for 'figure'); stdout if omitted")
    common.add_argument("--jobs", type=int, help=f"worker processes (env {JOBS_ENV}, default: CPU count)")
    common.add_argument("--seed-count", dest="seed_count", type=int, help="random seeds for 'verify'")

    parser = _Parser(prog="rabi-darboux", description="Exactly solvable two-level drives from Darboux transformations")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("rabi", parents=[common], help="constant-drive Rabi probability")
    p.add_argument("--ode", action="store_true", default=None, help="add the integrated P column")

    p = sub.add_parser("simulate", parents=[common], help="integrate the equations of motion")
    p.add_argument("--drive", choices=["constant", "monotone", "oscillatory", "tabulated"])
    p.add_argument("--table", help="CSV file with columns t,f for --drive tabulated")

    sub.add_parser("transform", parents=[common], help="closed-form Darboux-transformed solution")

    p = sub.add_parser("detuning", parents=[common], help="reconstructed detuning delta1(t)")
    p.add_argument("--drive", choices=["constant", "monotone", "oscillatory", "tabulated"])
    p.add_argument("--table", help="CSV file with columns t,f for --drive tabulated")

    p = sub.add_parser("figure", parents=[common], help="data behind the figures, one CSV per curve")
    p.add_argument("figure_id", choices=list(FIGURES))

    p = sub.add_parser("verify", parents=[common], help="identity suite and oracle comparisons")
    p.add_argument("--seed", type=int, help="RNG seed for the random parameter sweep (default 0)")
    p.add_argument("--inject-fault", dest="inject_fault", action="store_true", default=None,
                   help="perturb w1 by 1e-3 to exercise the failure path")

    p = sub.add_parser("sweep", parents=[common], help="frequency and inversion-floor sweep")
    p.add_argument("--varpi-list", dest="varpi_list", help="comma-separated varpi values")
    p.add_argument("--a-list", dest="a_list", help="comma-separated phases; 'special' allowed")
    p.add_argument("--omega0-list", dest="omega0_list", help="comma-separated omega0 values")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve_config(args)
        return COMMANDS[cfg.command](cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except RabiDarbouxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def run() -> None:
    sys.exit(main())
