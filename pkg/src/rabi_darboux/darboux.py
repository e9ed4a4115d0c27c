"""Darboux (intertwining) transformation of constant-detuning Rabi dynamics.

Starting from a constant drive ``f0``, a transformation function built from
a solution at the imaginary eigenvalue ``i R`` yields the first-order operator
``L = d/dt - W`` with ``W = diag(w1, conj(w1))``. ``L`` maps solutions of the
constant-drive system to solutions of a new system with drive
``f1 = f0 + delta_f(t)``.

All quantities are expressed through a real auxiliary function ``psi`` with
``psi'' + varpi^2 psi = 0`` where ``varpi^2 = f0^2 - R^2``. The Riccati
variable ``q = (R psi - psi') / (f0 psi)`` is carried as the homogeneous pair
``(N, D) = (R psi - psi', f0 psi)`` so nothing divides by the zeros of ``psi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NumericalError, PoleError, ValidationError
from .twolevel import GROUND, Oscillatory, SpinorState, TimeGrid, Trace, rabi_propagator

__all__ = [
    "TransformSeed",
    "QTrajectory",
    "WMatrix",
    "psi_pair",
    "q_trajectory",
    "q_oscillatory",
    "delta_f",
    "f1_monotone",
    "f1_general",
    "f1_oscillatory",
    "special_phase_a",
    "u_ratio",
    "w_matrix",
    "w_matrix_derivative",
    "apply_intertwiner",
    "transformed_basis",
    "transformed_solution",
    "transformed_drive",
    "p1_closed_form",
]

_SEED_RTOL = 1e-12


@dataclass(frozen=True)
class TransformSeed:
    """Parameters of one Darboux step.

    Parameters
    ----------
    f0 : float
        Constant drive of the seed system; must be positive.
    varpi : float
        Frequency of ``psi``; ``0 <= varpi < f0``. ``R`` is derived as
        ``sqrt(f0**2 - varpi**2)``.
    a : float
        Phase of ``psi`` for ``varpi > 0``.
    A, B : float
        Amplitudes. For ``varpi > 0``, ``psi = (A / varpi) sin(varpi t + a + b)``
        and only ``A != 0`` matters. For ``varpi == 0``, ``psi = A t + B`` with
        the constraint ``A == 2 B f0``; ``A`` defaults accordingly.
    R : float, optional
        If given, checked against ``varpi**2 + R**2 == f0**2``.
    """

    f0: float
    varpi: float = 0.0
    a: float = 0.0
    A: Optional[float] = None
    B: float = 1.0
    R: Optional[float] = None

    def __post_init__(self):
        f0, varpi = float(self.f0), float(self.varpi)
        if not (math.isfinite(f0) and math.isfinite(varpi) and math.isfinite(self.a)):
            raise ValidationError("seed parameters must be finite")
        if f0 <= 0:
            raise ValidationError(f"seed requires f0 > 0, got {f0}")
        if not (0.0 <= varpi < f0):
            raise ValidationError(f"seed requires 0 <= varpi < f0 (so that R > 0), got varpi={varpi}")
        R = math.sqrt((f0 - varpi) * (f0 + varpi))
        if self.R is not None:
            if not math.isclose(varpi**2 + float(self.R) ** 2, f0**2, rel_tol=_SEED_RTOL, abs_tol=0.0):
                raise ValidationError(
                    f"inconsistent seed: varpi^2 + R^2 = {varpi**2 + self.R**2!r} != f0^2 = {f0**2!r}"
                )
            if self.R <= 0:
                raise ValidationError("seed requires R > 0")
        object.__setattr__(self, "R", R)

        B = float(self.B)
        if varpi == 0.0:
            A = 2.0 * B * f0 if self.A is None else float(self.A)
            if B == 0.0:
                raise ValidationError("varpi = 0 seed requires B != 0")
            if not math.isclose(A, 2.0 * B * f0, rel_tol=_SEED_RTOL):
                raise ValidationError(f"varpi = 0 seed requires A = 2 B f0, got A={A}, B={B}")
        else:
            A = 1.0 if self.A is None else float(self.A)
            if A == 0.0:
                raise ValidationError("seed requires A != 0")
        object.__setattr__(self, "f0", f0)
        object.__setattr__(self, "varpi", varpi)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @classmethod
    def from_eigenvalue(cls, f0: float, eigenvalue: complex, a: float = 0.0, A=None, B: float = 1.0):
        """Build a seed from the transformation eigenvalue ``lambda = i R``.

        Only purely imaginary eigenvalues keep the transformed drive real.
        """
        lam = complex(eigenvalue)
        if lam.real != 0.0:
            raise ValidationError(f"transformation eigenvalue must be purely imaginary, got {lam}")
        R = lam.imag
        if not (0.0 < R <= f0):
            raise ValidationError(f"need 0 < Im(lambda) <= f0, got {R}")
        varpi = math.sqrt(max(f0 * f0 - R * R, 0.0))
        return cls(f0=f0, varpi=varpi, a=a, A=A, B=B)

    @property
    def eigenvalue(self) -> complex:
        return 1j * self.R

    @property
    def b(self) -> float:
        """Phase fixed by ``sin 2b = varpi / f0``, ``cos 2b = R / f0``."""
        return 0.5 * math.atan2(self.varpi, self.R)


def psi_pair(seed: TransformSeed, t):
    """``(psi(t), dpsi/dt(t))`` for the seed."""
    t = np.asarray(t, dtype=float)
    if seed.varpi == 0.0:
        return seed.A * t + seed.B, np.full_like(t, seed.A)
    phase = seed.varpi * t + seed.a + seed.b
    return (seed.A / seed.varpi) * np.sin(phase), seed.A * np.cos(phase)


@dataclass(frozen=True)
class QTrajectory:
    """Homogeneous representation ``q(t) = N(t) / D(t)`` of the Riccati solution."""

    seed: TransformSeed

    def __call__(self, t):
        psi, dpsi = psi_pair(self.seed, t)
        return self.seed.R * psi - dpsi, self.seed.f0 * psi

    def derivative(self, t):
        """``(dN/dt, dD/dt)`` using ``psi'' = -varpi^2 psi``."""
        psi, dpsi = psi_pair(self.seed, t)
        return self.seed.R * dpsi + self.seed.varpi**2 * psi, self.seed.f0 * dpsi

    def q(self, t):
        N, D = self(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            return N / D

    def riccati_residual(self, t):
        """``(dq/dt + 2 R q - f0 (1 + q^2)) / (1 + q^2)`` in homogeneous form.

        Bounded even where ``psi`` vanishes; equals zero identically for an exact ``q``.
        """
        N, D = self(t)
        dN, dD = self.derivative(t)
        R, f0 = self.seed.R, self.seed.f0
        s = N * N + D * D
        return (dN * D - N * dD + 2.0 * R * N * D - f0 * s) / s


def q_trajectory(seed: TransformSeed) -> QTrajectory:
    return QTrajectory(seed)


def q_oscillatory(f0: float, varpi: float, a: float, t):
    """Closed form of ``q`` for the oscillating family, written directly in ``(varpi, a)``."""
    t = np.asarray(t, dtype=float)
    R = math.sqrt(f0 * f0 - varpi * varpi)
    x = 2.0 * varpi * t + 2.0 * a
    return (R * np.cos(x) + varpi * np.sin(x) - f0) / (f0 * np.cos(x) - R)


def delta_f(seed: TransformSeed, q: Optional[QTrajectory] = None, t=0.0):
    """Drive correction ``4 R q / (1 + q^2) - 2 f0`` evaluated as ``4 R N D / (N^2 + D^2) - 2 f0``."""
    N, D = (q or QTrajectory(seed))(t)
    return 4.0 * seed.R * N * D / (N * N + D * D) - 2.0 * seed.f0


def transformed_drive(seed: TransformSeed, t):
    """New drive ``f1 = f0 + delta_f`` generated by ``seed``."""
    return seed.f0 + delta_f(seed, None, t)


def f1_monotone(f0: float, t):
    """``f0 - 4 f0 / (1 + 4 f0^2 t^2)``; rises from ``-3 f0`` at t = 0 to ``f0``."""
    if f0 == 0:
        raise ValidationError("f1_monotone requires f0 != 0")
    t = np.asarray(t, dtype=float)
    return f0 - 4.0 * f0 / (1.0 + 4.0 * f0**2 * t**2)


def f1_general(f0: float, A: float, B: float, t):
    """Transformed drive for ``psi = A t + B`` with ``R = f0`` and unconstrained ``(A, B)``.

    For real nonzero ``A`` the denominator has negative discriminant
    (``-4 A^4 f0^2``), so the pole branch is only reachable through overflow
    or degenerate input.
    """
    if f0 == 0:
        raise ValidationError("f1_general requires f0 != 0")
    if A == 0 and B == 0:
        raise ValidationError("f1_general requires (A, B) != (0, 0)")
    t = np.asarray(t, dtype=float)
    den = 2 * A**2 * f0**2 * t**2 - 2 * A * f0 * (A - 2 * B * f0) * t + A**2 - 2 * A * B * f0 + 2 * B**2 * f0**2
    bad = (den == 0) | ~np.isfinite(den)
    if np.any(bad):
        raise PoleError(float(np.broadcast_to(t, den.shape)[bad].flat[0]))
    return f0 - 2 * A**2 * f0 / den


def f1_oscillatory(f0: float, varpi: float, a: float, t):
    """``f0 + 2 varpi^2 / (R cos(2 varpi t + 2a) - f0)``, the oscillating family in closed form."""
    return Oscillatory(f0, varpi, a)(t)


def special_phase_a(f0: float, varpi: float) -> float:
    """Phase ``a`` for which the oscillating family tends to :func:`f1_monotone` as ``varpi -> 0``."""
    if not (0.0 < varpi < f0):
        raise ValidationError(f"special_phase_a requires 0 < varpi < f0, got varpi={varpi}, f0={f0}")
    R = math.sqrt(f0 * f0 - varpi * varpi)
    return math.atan(varpi / (2.0 * f0)) - 0.5 * math.atan(varpi / R)


@dataclass(frozen=True)
class WMatrix:
    """Diagonal of ``W = dU/dt U^-1``; ``w2`` is the complex conjugate of ``w1``."""

    w1: np.ndarray
    w2: np.ndarray

    def as_matrix(self) -> np.ndarray:
        w1 = np.asarray(self.w1)
        out = np.zeros(w1.shape + (2, 2), dtype=complex)
        out[..., 0, 0] = w1
        out[..., 1, 1] = self.w2
        return out


def u_ratio(q: QTrajectory, t):
    """``u21 / u11 = (1 + i q)^2 / (1 + q^2)`` as ``(D + i N)^2 / (N^2 + D^2)``; unit modulus."""
    N, D = q(t)
    return (D + 1j * N) ** 2 / (N * N + D * D)


def w_matrix(seed: TransformSeed, q: Optional[QTrajectory] = None, t=0.0) -> WMatrix:
    w1 = -1j * seed.f0 + seed.R * u_ratio(q or QTrajectory(seed), t)
    return WMatrix(w1, np.conj(w1))


def w_matrix_derivative(seed: TransformSeed, q: Optional[QTrajectory] = None, t=0.0) -> WMatrix:
    """Time derivative of ``W``, from the Riccati equation for ``q``.

    ``d/dt (1 + i q)/(1 - i q) = 2 i dq/dt / (1 - i q)^2`` with
    ``dq/dt = f0 (1 + q^2) - 2 R q``, written homogeneously in ``(N, D)``.
    """
    N, D = (q or QTrajectory(seed))(t)
    R, f0 = seed.R, seed.f0
    dw1 = R * 2j * (f0 * (N * N + D * D) - 2.0 * R * N * D) / (D - 1j * N) ** 2
    return WMatrix(dw1, np.conj(dw1))


def _rabi_generator(f0: float, xi: float) -> np.ndarray:
    """``-i M``: the constant-drive equations read ``dPsi/dt = -i M Psi``."""
    return -1j * np.array([[f0, xi], [xi, -f0]], dtype=complex)


def apply_intertwiner(seed: TransformSeed, xi: float, psi_state, t, w: Optional[WMatrix] = None):
    """``Phi = dPsi/dt - W Psi`` for a constant-drive solution value ``Psi`` at time ``t``.

    ``dPsi/dt`` is obtained by substituting the equations of motion with drive
    ``seed.f0``; no differencing is involved. ``psi_state`` may be a
    :class:`SpinorState` with scalar ``t`` or an array of shape ``(..., 2)``
    matching ``t``.
    """
    scalar = isinstance(psi_state, SpinorState)
    psi = psi_state.to_array() if scalar else np.asarray(psi_state, dtype=complex)
    if w is None:
        w = w_matrix(seed, None, t)
    dpsi = psi @ _rabi_generator(seed.f0, xi).T
    phi = np.stack([dpsi[..., 0] - w.w1 * psi[..., 0], dpsi[..., 1] - w.w2 * psi[..., 1]], axis=-1)
    return SpinorState.from_array(phi) if scalar else phi


def transformed_basis(seed: TransformSeed, xi: float, t):
    """Matrix whose columns are ``L`` applied to the two Rabi solutions with ``Psi(0) = e1, e2``.

    Shape ``t.shape + (2, 2)``. Its determinant equals ``xi^2 + R^2`` for all t.
    """
    t = np.asarray(t, dtype=float)
    U = rabi_propagator(seed.f0, xi, t)
    w = w_matrix(seed, None, t)
    gen = _rabi_generator(seed.f0, xi)
    G = gen @ U
    G[..., 0, :] -= np.asarray(w.w1)[..., None] * U[..., 0, :]
    G[..., 1, :] -= np.asarray(w.w2)[..., None] * U[..., 1, :]
    return G


def transformed_solution(
    seed: TransformSeed, xi: float, initial: SpinorState = GROUND, grid: Optional[TimeGrid] = None
) -> Trace:
    """Closed-form solution of the transformed system with drive ``f1``.

    Two independent constant-drive solutions are mapped through ``L`` and
    combined so that the result equals ``initial`` at ``grid.t0``.
    """
    if grid is None:
        raise ValidationError("transformed_solution requires a time grid")
    if not (xi > 0 and math.isfinite(xi)):
        raise ValidationError(f"coupling xi must be positive and finite, got {xi}")
    times = grid.times
    G = transformed_basis(seed, xi, times)
    G0 = G[0]
    det = G0[0, 0] * G0[1, 1] - G0[0, 1] * G0[1, 0]
    if abs(det) <= 1e-12 * (xi * xi + seed.R**2):
        raise NumericalError("transformed basis is degenerate at grid start")
    coeffs = np.linalg.solve(G0, initial.to_array())
    return Trace(times, G @ coeffs, kind="spinor")


def p1_closed_form(xi: float, f0: float, t):
    """Excited-state probability under :func:`f1_monotone`, starting in the ground state.

    With ``Omega0 = sqrt(f0^2 + xi^2)``; for ``xi^2 = 3 f0^2`` the expression
    collapses to ``3 f0^2 t^2 / (1 + 4 f0^2 t^2)``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValidationError("p1_closed_form requires t >= 0")
    om2 = f0 * f0 + xi * xi
    om = math.sqrt(om2)
    k = xi * xi - 3.0 * f0 * f0
    s, c = np.sin(om * t), np.cos(om * t)
    bracket = (
        16.0 * f0**4 * om2 * t**2 * c**2
        + 4.0 * f0**2 * om * t * k * np.sin(2.0 * om * t)
        + (4.0 * f0**2 * om2**2 * t**2 + k * k) * s**2
    )
    return xi * xi * bracket / (om2**3 * (1.0 + 4.0 * f0**2 * t**2))
