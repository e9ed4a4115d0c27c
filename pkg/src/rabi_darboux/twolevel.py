"""Two-level system in the rotating wave approximation.

Amplitudes ``(a1, a2)`` of the ground and excited levels obey::

    i da1/dt - f(t) a1 = xi a2
    i da2/dt + f(t) a2 = xi a1

where ``xi`` is half the Rabi frequency and ``f`` is half the time derivative
of ``delta(t) t`` (``delta`` being the detuning). Everything is in reduced
units: ``xi`` and ``f`` are angular frequencies in an arbitrary time unit.

The module provides the drive laws, the right-hand side, the Rabi closed
form and an adaptive integrator that serves as the independent numerical
oracle for every closed form in the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.integrate import DOP853
from scipy.interpolate import CubicSpline

from .errors import IntegrationError, ValidationError

__all__ = [
    "SpinorState",
    "GROUND",
    "Constant",
    "MonotoneLimit",
    "Oscillatory",
    "Tabulated",
    "DriveProfile",
    "DriveParams",
    "TimeGrid",
    "Trace",
    "schrodinger_rhs",
    "rabi_probability",
    "rabi_propagator",
    "evolve",
    "probability",
    "norm_drift",
]


@dataclass(frozen=True)
class SpinorState:
    """Complex amplitude pair of the two-level system at one instant."""

    a1: complex
    a2: complex

    def __post_init__(self):
        object.__setattr__(self, "a1", complex(self.a1))
        object.__setattr__(self, "a2", complex(self.a2))
        if not (np.isfinite(self.a1) and np.isfinite(self.a2)):
            raise ValidationError("spinor amplitudes must be finite")

    @property
    def norm2(self) -> float:
        return abs(self.a1) ** 2 + abs(self.a2) ** 2

    def to_array(self) -> np.ndarray:
        return np.array([self.a1, self.a2], dtype=complex)

    @classmethod
    def from_array(cls, arr) -> "SpinorState":
        a1, a2 = np.asarray(arr, dtype=complex)
        return cls(a1, a2)


GROUND = SpinorState(1.0, 0.0)


# --------------------------------------------------------------------------
# Drive laws f(t)
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Constant:
    """Time-independent drive ``f(t) = f0`` (ordinary Rabi oscillations)."""

    f0: float

    def __call__(self, t):
        return np.full_like(np.asarray(t, dtype=float), float(self.f0))


@dataclass(frozen=True)
class MonotoneLimit:
    """Drive ``f0 - 4 f0 / (1 + 4 f0^2 t^2)``.

    Paired with ``xi**2 == 3 * f0**2`` it yields monotone excitation towards 3/4.
    """

    f0: float

    def __post_init__(self):
        if self.f0 == 0:
            raise ValidationError("MonotoneLimit requires f0 != 0")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.f0 - 4.0 * self.f0 / (1.0 + 4.0 * self.f0**2 * t**2)


@dataclass(frozen=True)
class Oscillatory:
    """Drive ``f0 + 2 varpi^2 / (R cos(2 varpi t + 2a) - f0)`` with ``R = sqrt(f0^2 - varpi^2)``.

    The denominator is strictly negative for ``0 < varpi < f0``, so the law is
    bounded and smooth for all t.
    """

    f0: float
    varpi: float
    a: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.varpi < self.f0):
            raise ValidationError(
                f"Oscillatory drive requires 0 < varpi < f0, got varpi={self.varpi}, f0={self.f0}"
            )

    @property
    def R(self) -> float:
        return math.sqrt(self.f0**2 - self.varpi**2)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        phase = 2.0 * self.varpi * t + 2.0 * self.a
        return self.f0 + 2.0 * self.varpi**2 / (self.R * np.cos(phase) - self.f0)


@dataclass(frozen=True, eq=False)
class Tabulated:
    """Drive sampled on a table, interpolated by a clamped cubic spline."""

    times: np.ndarray
    values: np.ndarray
    _spline: CubicSpline = field(init=False, repr=False)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape:
            raise ValidationError("tabulated times and values must be 1-D and of equal length")
        if len(times) < 2:
            raise ValidationError("tabulated drive needs at least 2 samples")
        if np.any(np.diff(times) <= 0):
            raise ValidationError("tabulated times must be strictly increasing")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(values))):
            raise ValidationError("tabulated drive must be finite")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        bc = "clamped" if len(times) > 2 else "not-a-knot"
        object.__setattr__(self, "_spline", CubicSpline(times, values, bc_type=bc, extrapolate=False))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < self.times[0]) or np.any(t > self.times[-1]):
            raise ValidationError(
                f"t outside tabulated range [{self.times[0]}, {self.times[-1]}]"
            )
        return self._spline(t)


DriveProfile = Union[Constant, MonotoneLimit, Oscillatory, Tabulated]


@dataclass(frozen=True)
class DriveParams:
    xi: float
    drive: DriveProfile

    def __post_init__(self):
        if not (self.xi > 0 and math.isfinite(self.xi)):
            raise ValidationError(f"coupling xi must be positive and finite, got {self.xi}")


@dataclass(frozen=True)
class TimeGrid:
    """Uniform sampling of ``[t0, t1]`` with ``n`` points."""

    t0: float
    t1: float
    n: int

    def __post_init__(self):
        if not (math.isfinite(self.t0) and math.isfinite(self.t1)) or self.t1 <= self.t0:
            raise ValidationError(f"time grid needs t1 > t0, got [{self.t0}, {self.t1}]")
        if int(self.n) != self.n or self.n < 2:
            raise ValidationError(f"time grid needs n >= 2 samples, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, self.n)

    @property
    def step(self) -> float:
        return (self.t1 - self.t0) / (self.n - 1)

    def describe(self) -> str:
        return f"[{self.t0:g}, {self.t1:g}] n={self.n}"


@dataclass(frozen=True, eq=False)
class Trace:
    """Time-stamped samples.

    ``values`` has shape ``(n,)`` for scalar traces and ``(n, 2)`` for spinor
    traces (columns ``a1``, ``a2``).
    """

    times: np.ndarray
    values: np.ndarray
    kind: str = "scalar"

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values)
        if times.ndim != 1 or len(times) == 0:
            raise ValidationError("trace times must be a non-empty 1-D sequence")
        if len(values) != len(times):
            raise ValidationError("trace values and times differ in length")
        if np.any(np.diff(times) <= 0):
            raise ValidationError("trace times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.times)

    def state(self, i: int) -> SpinorState:
        return SpinorState.from_array(self.values[i])


# --------------------------------------------------------------------------
# Equations of motion and closed forms
# --------------------------------------------------------------------------


def schrodinger_rhs(f_at_t, xi, state):
    """Time derivative ``(da1/dt, da2/dt)`` of the amplitudes.

    ``state`` may be a :class:`SpinorState` (a SpinorState is returned) or an
    array whose last axis holds ``(a1, a2)``.
    """
    if isinstance(state, SpinorState):
        a1, a2 = state.a1, state.a2
        return SpinorState(-1j * f_at_t * a1 - 1j * xi * a2, 1j * f_at_t * a2 - 1j * xi * a1)
    arr = np.asarray(state, dtype=complex)
    a1, a2 = arr[..., 0], arr[..., 1]
    return np.stack([-1j * f_at_t * a1 - 1j * xi * a2, 1j * f_at_t * a2 - 1j * xi * a1], axis=-1)


def rabi_probability(xi, f0, t):
    """Excited-state probability for a constant drive, starting in the ground state.

    ``P(t) = xi^2 / (2 Omega^2) * (1 - cos(2 Omega t))`` with ``Omega^2 = f0^2 + xi^2``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValidationError("rabi_probability requires t >= 0")
    omega2 = f0**2 + xi**2
    if omega2 == 0:
        return np.zeros_like(t)
    omega = math.sqrt(omega2)
    # sin^2 form avoids cancellation in 1 - cos near t = 0
    return xi**2 / omega2 * np.sin(omega * t) ** 2


def rabi_propagator(f0, xi, t):
    """``exp(-i M t)`` for ``M = [[f0, xi], [xi, -f0]]``, stacked over ``t``.

    Returns an array of shape ``t.shape + (2, 2)``.
    """
    t = np.asarray(t, dtype=float)
    omega = math.hypot(f0, xi)
    c = np.cos(omega * t)
    s = np.sinc(omega * t / np.pi) * t  # sin(omega t) / omega, finite at omega = 0
    out = np.empty(t.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c - 1j * f0 * s
    out[..., 0, 1] = -1j * xi * s
    out[..., 1, 0] = -1j * xi * s
    out[..., 1, 1] = c + 1j * f0 * s
    return out


def evolve(
    params: DriveParams,
    initial: SpinorState,
    grid: TimeGrid,
    tol: float = 1e-10,
    min_step: float | None = None,
) -> Trace:
    """Integrate the equations of motion and sample the state on ``grid``.

    Uses the embedded 8(5,3) Dormand-Prince pair; grid samples come from each
    step's dense output. ``tol`` is the relative tolerance; the absolute
    tolerance is ``tol`` times 1e-2 of the initial amplitude.

    Raises
    ------
    IntegrationError
        If the step size drops below ``min_step`` (default ``1e-12`` of the
        time span) or the stepper fails otherwise. This is what a pathological
        drive, e.g. a near-discontinuous table, produces.
    """
    if not (1e-13 <= tol <= 1e-3):
        raise ValidationError(f"tol must lie in [1e-13, 1e-3], got {tol}")
    y0 = initial.to_array()
    norm0 = initial.norm2
    if norm0 <= 0:
        raise ValidationError("initial state has zero norm")
    drive, xi = params.drive, params.xi
    if isinstance(drive, Tabulated):
        drive(np.array([grid.t0, grid.t1]))  # range check up front
    span = grid.t1 - grid.t0
    if min_step is None:
        min_step = 1e-12 * span

    def rhs(t, y):
        f = float(drive(t))
        return np.array([-1j * f * y[0] - 1j * xi * y[1], 1j * f * y[1] - 1j * xi * y[0]])

    t_eval = grid.times
    out = np.empty((len(t_eval), 2), dtype=complex)
    out[0] = y0
    solver = DOP853(rhs, grid.t0, y0, grid.t1, rtol=tol, atol=tol * 1e-2 * math.sqrt(norm0))
    k = 1
    while solver.status == "running":
        message = solver.step()
        if solver.status == "failed":
            raise IntegrationError(f"integration failed: {message}", solver.t)
        if not np.all(np.isfinite(solver.y)):
            raise IntegrationError("non-finite state", solver.t)
        if solver.status == "running" and solver.step_size < min_step:
            raise IntegrationError(f"step-size underflow (step {solver.step_size:.3g} < {min_step:.3g})", solver.t)
        if k < len(t_eval) and t_eval[k] <= solver.t:
            j = np.searchsorted(t_eval, solver.t, side="right")
            out[k:j] = solver.dense_output()(t_eval[k:j]).T
            k = j
    out[-1] = solver.y
    return Trace(t_eval, out, kind="spinor")


def probability(trace: Trace) -> Trace:
    """Excited-state probability ``|a2|^2 / (|a1|^2 + |a2|^2)`` at every sample."""
    values = np.asarray(trace.values)
    if values.ndim != 2 or values.shape[1] != 2:
        raise ValidationError("probability() expects a spinor trace")
    p2 = np.abs(values[:, 1]) ** 2
    norm2 = np.abs(values[:, 0]) ** 2 + p2
    if np.any(norm2 == 0):
        i = int(np.argmax(norm2 == 0))
        raise ValidationError(f"zero-norm state at t={trace.times[i]:.17g}")
    return Trace(trace.times, p2 / norm2, kind="probability")


def norm_drift(trace: Trace) -> float:
    """Largest deviation of the squared norm from its initial value."""
    values = np.asarray(trace.values)
    norm2 = np.sum(np.abs(values) ** 2, axis=1)
    return float(np.max(np.abs(norm2 - norm2[0])))
