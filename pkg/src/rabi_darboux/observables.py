"""Derived quantities: reconstructed detuning, oscillation frequencies, inversion floor."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid
from scipy.signal import find_peaks

from .errors import ValidationError
from .twolevel import DriveProfile, TimeGrid, Trace

__all__ = [
    "DetuningTrace",
    "FrequencyEstimate",
    "EnvelopeFloor",
    "detuning_trace",
    "oscillation_frequencies",
    "envelope_minimum",
    "period_average",
]

MIN_FAST_PERIODS = 20
FLAT_VARIATION = 1e-6


@dataclass(frozen=True, eq=False)
class DetuningTrace:
    times: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        if len(self.times) != len(self.delta):
            raise ValidationError("detuning times and values differ in length")
        if np.any(np.diff(self.times) <= 0):
            raise ValidationError("detuning times must be strictly increasing")


def _cell_integrals(drive: DriveProfile, times: np.ndarray, refine: int) -> np.ndarray:
    """Composite Simpson integral of ``drive`` over each cell ``[t_k, t_k+1]``."""
    h = np.diff(times) / refine
    # sub-nodes of every cell, shape (cells, refine + 1)
    nodes = times[:-1, None] + h[:, None] * np.arange(refine + 1)[None, :]
    nodes[:, -1] = times[1:]
    vals = drive(nodes)
    weights = np.ones(refine + 1)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    return h / 3.0 * (vals @ weights)


def detuning_trace(drive: DriveProfile, grid: TimeGrid, refine: int = 8) -> DetuningTrace:
    """Detuning ``delta1(t) = (2/t) int_0^t f(s) ds`` for a drive law.

    The running integral uses composite Simpson on ``refine`` (even, >= 8)
    sub-intervals per grid cell. At ``t = 0`` the value ``2 f(0)`` is taken by
    continuity.
    """
    if grid.t0 != 0.0:
        raise ValidationError(f"detuning reconstruction is anchored at t = 0, grid starts at {grid.t0}")
    if refine < 8 or refine % 2:
        raise ValidationError(f"refine must be even and >= 8, got {refine}")
    times = grid.times
    integral = np.concatenate([[0.0], np.cumsum(_cell_integrals(drive, times, refine))])
    delta = np.empty_like(times)
    delta[0] = 2.0 * float(drive(0.0))
    delta[1:] = 2.0 * integral[1:] / times[1:]
    return DetuningTrace(times, delta)


@dataclass(frozen=True)
class FrequencyEstimate:
    """Angular frequencies (rad/time) and half peak-to-trough amplitudes.

    ``slow == 0`` means no slow modulation was detected; ``flat`` marks a
    signal without oscillations at all.
    """

    fast: float
    slow: float
    fast_amplitude: float
    slow_amplitude: float
    flat: bool = False

    @classmethod
    def flat_signal(cls) -> "FrequencyEstimate":
        return cls(0.0, 0.0, 0.0, 0.0, flat=True)

    @property
    def fast_period(self) -> float:
        return 2.0 * math.pi / self.fast if self.fast > 0 else math.inf

    @property
    def slow_period(self) -> float:
        return 2.0 * math.pi / self.slow if self.slow > 0 else math.inf


def _mean_period(peak_times: np.ndarray) -> float:
    """Mean spacing of peaks, counting an over-long gap as several skipped cycles."""
    gaps = np.diff(peak_times)
    ref = np.median(gaps)
    cycles = np.maximum(np.rint(gaps / ref), 1.0)
    return float(gaps.sum() / cycles.sum())


def _check_uniform(times: np.ndarray) -> float:
    steps = np.diff(times)
    dt = float(steps.mean())
    if np.max(np.abs(steps - dt)) > 1e-6 * dt:
        raise ValidationError("frequency estimation needs uniformly sampled traces")
    return dt


def oscillation_frequencies(p_trace: Trace) -> FrequencyEstimate:
    """Estimate the fast and slow oscillation frequencies of a probability trace.

    The fast period is the mean spacing of local maxima of the signal after
    removing a running mean over one provisional fast period. The slow
    frequency comes from the spacing of extrema of that running mean, which
    is where the slow modulation lives.
    """
    times = p_trace.times
    p = np.asarray(p_trace.values, dtype=float)
    if len(times) < 5:
        raise ValidationError("trace too short for frequency estimation")
    dt = _check_uniform(times)

    maxima, _ = find_peaks(p, prominence=FLAT_VARIATION)
    minima, _ = find_peaks(-p, prominence=FLAT_VARIATION)
    if len(maxima) < 2 or len(minima) < 1:
        return FrequencyEstimate.flat_signal()

    rough = _mean_period(times[maxima])
    w = max(int(round(rough / dt)), 1)
    if w >= len(p):
        raise ValidationError("trace shorter than one fast period")
    baseline = np.convolve(p, np.ones(w) / w, mode="valid")
    base_times = times[: len(baseline)] + 0.5 * (w - 1) * dt
    lo, hi = np.searchsorted(times, [base_times[0], base_times[-1]])
    detrended = p[lo : hi + 1] - np.interp(times[lo : hi + 1], base_times, baseline)

    peaks, _ = find_peaks(detrended, prominence=FLAT_VARIATION)
    troughs, _ = find_peaks(-detrended, prominence=FLAT_VARIATION)
    peak_times = times[lo + peaks] if len(peaks) >= 2 else times[maxima]
    fast_period = _mean_period(peak_times)
    span = times[-1] - times[0]
    if span < MIN_FAST_PERIODS * fast_period:
        raise ValidationError(
            f"trace spans {span / fast_period:.1f} fast periods, need at least {MIN_FAST_PERIODS}"
        )
    fast_amp = 0.5 * (np.mean(detrended[peaks]) - np.mean(detrended[troughs])) if len(troughs) else 0.0

    base_range = float(baseline.max() - baseline.min())
    # ripple left by an imperfect running mean stays well below the slow swing
    prominence = 0.5 * base_range
    slow = 0.0
    if base_range > max(0.1 * fast_amp, 10 * FLAT_VARIATION):
        bmax, _ = find_peaks(baseline, prominence=prominence)
        bmin, _ = find_peaks(-baseline, prominence=prominence)
        candidates = [idx for idx in (bmax, bmin) if len(idx) >= 2]
        if candidates:
            # double-humped slow crests make one extremum family irregular; use the steadier one
            best = min(candidates, key=lambda idx: (np.std(np.diff(base_times[idx])), -len(idx)))
            slow = 2.0 * math.pi / _mean_period(base_times[best])
    slow_amp = 0.5 * base_range if slow > 0 else 0.0
    return FrequencyEstimate(2.0 * math.pi / fast_period, slow, float(fast_amp), slow_amp)


@dataclass(frozen=True)
class EnvelopeFloor:
    """Window statistics of a probability trace over a sub-interval.

    ``floor`` is the largest per-window minimum: some window of the requested
    length keeps the probability at or above it throughout. ``minimum`` is the
    plain minimum over the sub-interval.
    """

    floor: float
    minimum: float
    floor_window_start: float


def envelope_minimum(p_trace: Trace, window: float, start: float = None, stop: float = None) -> EnvelopeFloor:
    """Fast-oscillation floor of ``p_trace`` on ``[start, stop]``.

    The sub-interval is cut into consecutive windows of length ``window``
    (which should cover at least one fast period); the minimum of P is taken
    in each and the largest of these minima is reported as the floor.
    """
    times = p_trace.times
    p = np.asarray(p_trace.values, dtype=float)
    start = times[0] if start is None else start
    stop = times[-1] if stop is None else stop
    if stop <= start:
        raise ValidationError("envelope_minimum needs stop > start")
    mask = (times >= start) & (times <= stop)
    t, v = times[mask], p[mask]
    if len(t) < 2:
        raise ValidationError("no samples in the requested sub-interval")
    dt = float(np.mean(np.diff(t)))
    if window < 2 * dt or window > stop - start:
        raise ValidationError(f"window {window} must span several samples and fit inside the sub-interval")
    n_windows = int((stop - start) // window)
    edges = start + window * np.arange(n_windows + 1)
    idx = np.searchsorted(t, edges)
    minima = np.array([v[idx[k] : max(idx[k + 1], idx[k] + 1)].min() for k in range(n_windows)])
    k = int(np.argmax(minima))
    return EnvelopeFloor(float(minima[k]), float(v.min()), float(edges[k]))


def period_average(p_trace: Trace, period: float) -> float:
    """Time average of a scalar trace over its final ``period`` (trapezoid rule)."""
    times = p_trace.times
    if not (0 < period <= times[-1] - times[0]):
        raise ValidationError(f"period {period} does not fit in the trace")
    t_start = times[-1] - period
    mask = times >= t_start
    t = np.concatenate([[t_start], times[mask]])
    v = np.concatenate([[np.interp(t_start, times, p_trace.values)], np.asarray(p_trace.values)[mask]])
    return float(trapezoid(v, t) / period)
