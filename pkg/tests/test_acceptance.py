"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` (the lines are printed even
under output capture) or directly with ``python3 tests/test_acceptance.py``.
"""

import contextlib
import io
import math
import os
import tempfile
from pathlib import Path

import numpy as np
import pytest

from rabi_darboux import (
    GROUND,
    Constant,
    DriveParams,
    MonotoneLimit,
    Oscillatory,
    TimeGrid,
    TransformSeed,
    detuning_trace,
    evolve,
    f1_monotone,
    f1_oscillatory,
    norm_drift,
    oscillation_frequencies,
    period_average,
    probability,
    rabi_probability,
    special_phase_a,
    transformed_solution,
)
from rabi_darboux.cli import main, run_sweep
from rabi_darboux.susy import all_residuals, intertwining_residual, random_seeds

TOL = 1e-10
SQ3 = math.sqrt(3.0)

# norm drifts of every integrated trace in criteria 1-4, filled as they run
_DRIFTS = {}


def _integrate(label, params, grid):
    trace = evolve(params, GROUND, grid, tol=TOL)
    _DRIFTS[label] = norm_drift(trace)
    return trace


def criterion_1():
    f0, xi = 1.0, SQ3
    omega = math.hypot(f0, xi)
    grid = TimeGrid(0.0, 20.0 / omega, 2001)
    p = probability(_integrate("rabi", DriveParams(xi, Constant(f0)), grid)).values
    err = float(np.max(np.abs(p - rabi_probability(xi, f0, grid.times))))
    return err <= 1e-8, f"max |P_ode - P_rabi| = {err:.2e} (<= 1e-8)"


def criterion_2():
    f0, xi = 1.0, SQ3
    grid = TimeGrid(0.0, 100.0 / f0, 10001)
    t = grid.times
    exact = 3 * f0**2 * t**2 / (1 + 4 * f0**2 * t**2)
    ode = probability(_integrate("monotone", DriveParams(xi, MonotoneLimit(f0)), grid)).values
    dar = probability(transformed_solution(TransformSeed(f0), xi, GROUND, grid)).values
    err_ode = float(np.max(np.abs(ode - exact)))
    err_dar = float(np.max(np.abs(dar - exact)))
    asym = abs(float(dar[-1]) - 0.75)
    mono = bool(np.all(np.diff(ode) >= 0) and np.all(np.diff(dar) >= 0))
    ok = err_ode <= 1e-6 and err_dar <= 1e-6 and asym < 1e-3 and mono
    return ok, (
        f"ode err {err_ode:.2e}, darboux err {err_dar:.2e} (<= 1e-6); "
        f"|P1(100/f0) - 0.75| = {asym:.2e} (< 1e-3); monotone = {mono}"
    )


def _fig1a_trace():
    grid = TimeGrid(0.0, 80.0, 8001)
    return grid, probability(transformed_solution(TransformSeed(1.0, 0.25, 0.015), SQ3, GROUND, grid))


def criterion_3():
    grid, p = _fig1a_trace()
    ode = probability(_integrate("fig1a", DriveParams(SQ3, Oscillatory(1.0, 0.25, 0.015)), grid)).values
    path_err = float(np.max(np.abs(ode - p.values)))
    est = oscillation_frequencies(p)
    fast_ok = abs(est.fast - 4.0) <= 0.05 * 4.0
    slow_ok = abs(est.slow - 0.5) <= 0.05 * 0.5
    mean = period_average(p, 2 * math.pi / 0.5)
    mean_ok = 0.70 <= mean <= 0.80
    ok = fast_ok and slow_ok and mean_ok and path_err <= 1e-6
    return ok, (
        f"fast {est.fast:.4f} (4 +- 5%), slow {est.slow:.4f} (0.5 +- 5%), "
        f"last-slow-period mean {mean:.4f} (in [0.70, 0.80]: {mean_ok}); darboux vs ode {path_err:.1e}"
    )


def criterion_4():
    varpi = 1e-3
    a = special_phase_a(1.0, varpi)
    t = np.linspace(0.0, 10.0, 100001)
    sup = float(np.max(np.abs(f1_oscillatory(1.0, varpi, a, t) - f1_monotone(1.0, t))))
    return sup <= 1e-2, f"sup |f1_osc - f1_monotone| on [0, 10] = {sup:.2e} (<= 1e-2)"


def criterion_5():
    rng = np.random.default_rng(0)
    worst = {}
    for seed, xi in random_seeds(100, rng):
        for rep in all_residuals(seed, xi):
            worst[rep.identity] = max(worst.get(rep.identity, 0.0), rep.max_abs)
    seed, xi = TransformSeed(1.0, 0.25, 0.015), SQ3
    perturbed = intertwining_residual(seed, xi, w1_shift=1e-3).max_abs
    ok = all(v <= 1e-8 for v in worst.values()) and perturbed > 1e-4
    parts = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    return ok, f"100 seeds: {parts} (<= 1e-8); perturbed w1 gives {perturbed:.1e} (> 1e-4)"


def criterion_6():
    # the traces are produced by criteria 1-3; run them if this is called alone
    for label, fn in (("rabi", criterion_1), ("monotone", criterion_2), ("fig1a", criterion_3)):
        if label not in _DRIFTS:
            fn()
    worst = max(_DRIFTS.values())
    return worst <= 1e-8, f"max norm^2 drift over {len(_DRIFTS)} integrated traces = {worst:.2e} (<= 1e-8)"


def criterion_7():
    grid = TimeGrid(0.0, 40.0, 4001)
    det = detuning_trace(MonotoneLimit(1.0), grid)
    t = grid.times[1:]
    err = float(np.max(np.abs(det.delta[1:] - (2 - 4 / t * np.arctan(2 * t)))))
    origin = float(det.delta[0])
    a = special_phase_a(1.0, 1e-3)
    osc = detuning_trace(Oscillatory(1.0, 1e-3, a), TimeGrid(0.0, 10.0, 1001))
    sel = osc.times >= 0.1
    mono = bool(np.all(np.diff(osc.delta[sel]) > 0))
    ok = err <= 1e-8 and origin == -6.0 and mono
    return ok, f"quadrature err {err:.2e} (<= 1e-8); delta1(0) = {origin:g}; varpi=1e-3 monotone on [0.1, 10] = {mono}"


def criterion_8():
    rows = run_sweep(
        1.0, [0.05, 0.1, 0.2], ["0", "special", "0.05"], [1.8, 2.0, 2.2], 40.0, 0.01, jobs=os.cpu_count() or 1
    )
    floors = [r[8] for r in rows]
    witnesses = sum(f > 0.5 for f in floors)
    best = rows[int(np.argmax(floors))]
    return witnesses >= 1, (
        f"{witnesses}/{len(rows)} points with floor > 0.5; best floor {best[8]:.3f} "
        f"at varpi={best[0]:g}, a={best[1]:.4g}, omega0={best[2]:g}"
    )


def criterion_9():
    with tempfile.TemporaryDirectory() as tmp:
        blobs = []
        for run in ("first", "second"):
            out = Path(tmp) / run
            with contextlib.redirect_stdout(io.StringIO()):
                code = main(["figure", "fig1a", "--out", str(out)])
            if code != 0:
                return False, f"figure fig1a exited with {code}"
            blobs.append({f.name: f.read_bytes() for f in sorted(out.iterdir())})
    same = blobs[0] == blobs[1] and len(blobs[0]) > 0
    return same, f"{len(blobs[0])} CSV files byte-identical across two runs = {same}"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8, criterion_9]


def _line(n, ok, detail):
    return f"criterion {n}: {'PASS' if ok else 'FAIL'}: {detail}"


@pytest.mark.parametrize("n", range(1, len(CRITERIA) + 1))
def test_criterion(n, capsys):
    ok, detail = CRITERIA[n - 1]()
    with capsys.disabled():
        print("\n" + _line(n, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    for n, fn in enumerate(CRITERIA, 1):
        print(_line(n, *fn()))
