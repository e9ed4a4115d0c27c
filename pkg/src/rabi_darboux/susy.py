"""Residual checks of the intertwining structure on explicit solutions.

Notation: ``gamma = i sigma_x``, ``V = i f sigma_y``, ``J = sigma_x``. The
constant-drive Hamiltonian is ``h0 = gamma d/dt + V0`` and the partner is
``h1 = gamma d/dt + V1``. Solutions satisfy ``h Psi = xi Psi``.

The backward operator used in the factorization check follows from the
formal adjoint ``L^+ = -d/dt - W^+``. Since ``W^+ = diag(conj w1, conj w2)
= diag(w2, w1)`` and conjugating a diagonal matrix by ``sigma_x`` swaps its
entries, ``J L^+ J = -d/dt - W``. On a solution ``Psi`` at energy ``xi`` the
factorization then reads ``(-d/dt - W) L Psi = (xi^2 + R^2) Psi``, because
``lambda^2 = -R^2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .darboux import (
    TransformSeed,
    WMatrix,
    apply_intertwiner,
    delta_f,
    q_trajectory,
    u_ratio,
    w_matrix,
    w_matrix_derivative,
)
from .twolevel import GROUND, SpinorState, TimeGrid, rabi_propagator

__all__ = [
    "ResidualReport",
    "intertwining_residual",
    "factorization_residual",
    "pseudo_adjoint_consistency",
    "random_seeds",
    "all_residuals",
    "DEFAULT_GRID",
]

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
GAMMA = 1j * SIGMA_X
J = SIGMA_X

DEFAULT_GRID = TimeGrid(0.0, 20.0, 2001)


@dataclass(frozen=True)
class ResidualReport:
    identity: str
    max_abs: float
    at_time: float
    grid: str

    def passed(self, tol: float) -> bool:
        return self.max_abs <= tol

    def __str__(self):
        return f"{self.identity:<20s} max|res| = {self.max_abs:.3e} at t = {self.at_time:.6g} on {self.grid}"


def _report(identity: str, residual: np.ndarray, times: np.ndarray, grid: TimeGrid) -> ResidualReport:
    mags = np.max(np.abs(residual).reshape(len(times), -1), axis=1)
    i = int(np.argmax(mags))
    return ResidualReport(identity, float(mags[i]), float(times[i]), grid.describe())


def _rabi_states(seed: TransformSeed, xi: float, initial: SpinorState, times: np.ndarray) -> np.ndarray:
    return rabi_propagator(seed.f0, xi, times) @ initial.to_array()


def _potential(f) -> np.ndarray:
    """``i f sigma_y`` stacked over samples of ``f``."""
    return 1j * np.asarray(f)[..., None, None] * SIGMA_Y


def _intertwined_pair(seed, xi, initial, times, w1_shift):
    """``Psi``, ``Phi = L Psi`` and ``dPhi/dt``, all analytic."""
    q = q_trajectory(seed)
    w = w_matrix(seed, q, times)
    if w1_shift:
        w = WMatrix(w.w1 + w1_shift, w.w2)
    dw = w_matrix_derivative(seed, q, times)
    psi = _rabi_states(seed, xi, initial, times)
    gen = -1j * np.array([[seed.f0, xi], [xi, -seed.f0]])
    dpsi = psi @ gen.T
    ddpsi = -(seed.f0**2 + xi**2) * psi
    phi = apply_intertwiner(seed, xi, psi, times, w=w)
    w_diag = np.stack([w.w1, w.w2], axis=-1)
    dw_diag = np.stack([dw.w1, dw.w2], axis=-1)
    dphi = ddpsi - dw_diag * psi - w_diag * dpsi
    return psi, phi, dphi, w_diag


def intertwining_residual(
    seed: TransformSeed,
    xi: float,
    grid: TimeGrid = DEFAULT_GRID,
    initial: SpinorState = GROUND,
    w1_shift: complex = 0.0,
) -> ResidualReport:
    """Max of ``|gamma dPhi/dt + V1 Phi - xi Phi|`` over the grid, with ``Phi = L Psi``.

    ``w1_shift`` perturbs ``w1`` to probe the sensitivity of the check.
    """
    times = grid.times
    _, phi, dphi, _ = _intertwined_pair(seed, xi, initial, times, w1_shift)
    V1 = _potential(seed.f0 + delta_f(seed, None, times))
    res = dphi @ GAMMA.T + np.einsum("nij,nj->ni", V1, phi) - xi * phi
    return _report("intertwining", res, times, grid)


def factorization_residual(
    seed: TransformSeed,
    xi: float,
    grid: TimeGrid = DEFAULT_GRID,
    initial: SpinorState = GROUND,
    constant: Optional[float] = None,
) -> ResidualReport:
    """Max of ``|(J L^+ J) L Psi - (xi^2 - lambda^2) Psi|`` over the grid.

    ``constant`` overrides ``xi^2 - lambda^2 = xi^2 + R^2``.
    """
    times = grid.times
    psi, phi, dphi, w_diag = _intertwined_pair(seed, xi, initial, times, 0.0)
    c = xi**2 + seed.R**2 if constant is None else constant
    res = -dphi - w_diag * phi - c * psi
    return _report("factorization", res, times, grid)


def pseudo_adjoint_consistency(seed: TransformSeed, xi: float, grid: TimeGrid = DEFAULT_GRID) -> ResidualReport:
    """Max of ``|J V J - V^+|`` for ``V0`` and for ``V1 = V0 + gamma W - W gamma``.

    ``W`` is assembled from ``w1 = -i f0 + R u21/u11`` and, independently,
    ``w2 = i f0 + R u11/u21``, so the check exercises the reality of the new
    drive rather than assuming it. The potentials do not depend on ``xi``;
    it is accepted so all three checks share one signature.
    """
    times = grid.times
    q = q_trajectory(seed)
    ratio = u_ratio(q, times)
    W = np.zeros((len(times), 2, 2), dtype=complex)
    W[:, 0, 0] = -1j * seed.f0 + seed.R * ratio
    W[:, 1, 1] = 1j * seed.f0 + seed.R / ratio
    V0 = _potential(np.full(len(times), seed.f0))
    V1 = V0 + GAMMA @ W - W @ GAMMA

    def deviation(V):
        return J @ V @ J - np.conj(np.swapaxes(V, -1, -2))

    res = np.concatenate([deviation(V0), deviation(V1)], axis=-1)
    return _report("pseudo-adjoint", res, times, grid)


def random_seeds(count: int, rng: np.random.Generator) -> Iterator[tuple[TransformSeed, float]]:
    """Random valid ``(seed, xi)`` pairs.

    ``f0`` in [0.1, 10], ``varpi / f0`` in (0, 1), ``a`` in [-1, 1], ``xi`` in [0.1, 10].
    """
    for _ in range(count):
        f0 = rng.uniform(0.1, 10.0)
        ratio = rng.uniform(0.0, 1.0)
        while not (0.0 < ratio < 1.0):
            ratio = rng.uniform(0.0, 1.0)
        a = rng.uniform(-1.0, 1.0)
        xi = rng.uniform(0.1, 10.0)
        yield TransformSeed(f0=f0, varpi=ratio * f0, a=a), xi


def all_residuals(seed: TransformSeed, xi: float, grid: TimeGrid = DEFAULT_GRID) -> list[ResidualReport]:
    return [
        intertwining_residual(seed, xi, grid),
        factorization_residual(seed, xi, grid),
        pseudo_adjoint_consistency(seed, xi, grid),
    ]

