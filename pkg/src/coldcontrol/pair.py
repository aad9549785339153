"""Two identical bosons on a 1D trap with a regularized contact interaction.

The wavefunction lives on the tensor grid ``psi[i, j] = psi(x_i, x_j)`` with
quadrature weight ``dx**2``.  The delta interaction becomes ``g/dx`` on the
grid diagonal ``x1 == x2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg

from .core import DiagonalOperator, SpatialGrid, StateVector, fftn, ifftn, kinetic_symbol
from .errors import ConvergenceFailure, InvalidArgument
from .gpe import PotentialFunction


@dataclass(frozen=True)
class TensorGrid2D:
    axis: SpatialGrid

    @property
    def n(self) -> int:
        return self.axis.n

    @property
    def dx(self) -> float:
        return self.axis.dx

    @property
    def size(self) -> int:
        return self.axis.n**2

    def mesh(self):
        return np.meshgrid(self.axis.x, self.axis.x, indexing="ij")


def contact_interaction(grid: TensorGrid2D, g: float) -> DiagonalOperator:
    values = np.zeros((grid.n, grid.n))
    np.fill_diagonal(values, g / grid.dx)
    return DiagonalOperator(values)


def swap(psi: np.ndarray) -> np.ndarray:
    return psi.T


def symmetrize(psi: np.ndarray) -> np.ndarray:
    return 0.5 * (psi + psi.T)


class TwoParticleHamiltonian:
    """``T1 + V(x1, u) + T2 + V(x2, u) + g delta(x1 - x2)``.

    ``potential`` is the single-particle :class:`PotentialFunction`.
    """

    def __init__(self, grid: TensorGrid2D, kin_factor: float, potential: PotentialFunction, g: float = 0.0):
        self.grid = grid
        self.kin_factor = float(kin_factor)
        self.potential = potential
        self.g = float(g)
        self.interaction = contact_interaction(grid, self.g).values
        self.k2 = kinetic_symbol(grid.axis, 2)

    @property
    def n_fields(self) -> int:
        return self.potential.n_fields

    def state(self, amplitudes) -> StateVector:
        return StateVector.on_grid(amplitudes, self.grid.axis, two_particle=True)

    def potential_values(self, u) -> np.ndarray:
        v = self.potential.values(u)
        return v[:, None] + v[None, :] + self.interaction

    def potential_derivative(self, u) -> np.ndarray:
        d = self.potential.derivative(u)
        return d[:, :, None] + d[:, None, :]

    def apply(self, psi: np.ndarray, u) -> np.ndarray:
        return ifftn(self.kin_factor * self.k2 * fftn(psi)) + self.potential_values(u) * psi

    def energy(self, psi: StateVector, u) -> float:
        return float(psi.weight * np.vdot(psi.amplitudes, self.apply(psi.amplitudes, u)).real)

    def residual(self, psi: StateVector, u) -> tuple[float, float]:
        a = psi.amplitudes
        ha = self.apply(a, u)
        e = float(psi.weight * np.vdot(a, ha).real)
        return e, float(np.sqrt(psi.weight) * np.linalg.norm(ha - e * a))


def split_step_2d(psi: StateVector, H: TwoParticleHamiltonian, u_now, u_next, dt: float) -> StateVector:
    if dt <= 0:
        raise InvalidArgument("dt must be positive")
    if psi.basis != "spatial-2d" or psi.amplitudes.shape != (H.grid.n, H.grid.n):
        raise InvalidArgument("state does not live on the Hamiltonian's tensor grid")
    v_mid = 0.5 * (H.potential_values(u_now) + H.potential_values(u_next))
    half = np.exp(-0.5j * dt * v_mid)
    a = half * psi.amplitudes
    a = ifftn(np.exp(-1j * H.kin_factor * H.k2 * dt) * fftn(a))
    return psi.with_amplitudes(half * a)


def _imaginary_time(H: TwoParticleHamiltonian, u, guess: np.ndarray, lower: list, steps: int, dtau: float):
    v = H.potential_values(u)
    half = np.exp(-0.5 * dtau * v)
    kin = np.exp(-H.kin_factor * H.k2 * dtau)
    w = H.grid.dx**2
    psi = guess
    for _ in range(steps):
        psi = half * ifftn(kin * fftn(half * psi))
        psi = symmetrize(psi)
        for phi in lower:
            psi = psi - (w * np.vdot(phi, psi)) * phi
        psi = psi / np.sqrt(w * np.vdot(psi, psi).real)
    return psi


def _symmetric_eigenstate(H: TwoParticleHamiltonian, u, level: int, tol: float, guesses: list) -> StateVector:
    """Polish imaginary-time guesses with Lanczos on the exchange-symmetric sector.

    The antisymmetric sector is shifted above the spectrum of interest so that
    the lowest eigenpairs of the shifted operator are the symmetric ones.
    """
    n = H.grid.n
    v = H.potential_values(u)
    shift = 2.0 * (np.max(v) + H.kin_factor * np.max(H.k2))

    def matvec(x):
        psi = x.reshape(n, n)
        sym = symmetrize(psi)
        out = H.apply(sym, u) + shift * (psi - sym)
        return out.ravel()

    op = scipy.sparse.linalg.LinearOperator((n * n, n * n), matvec=matvec, dtype=complex)
    v0 = np.sum(guesses, axis=0).ravel()
    try:
        vals, vecs = scipy.sparse.linalg.eigsh(op, k=level + 1, which="SA", v0=v0, tol=tol * 1e-3,
                                               maxiter=20 * n * n)
    except scipy.sparse.linalg.ArpackNoConvergence as exc:
        raise ConvergenceFailure("two-particle stationary state did not converge") from exc
    order = np.argsort(vals)
    vec = symmetrize(vecs[:, order[level]].reshape(n, n))
    i = np.unravel_index(np.argmax(np.abs(vec)), vec.shape)
    vec = vec * (abs(vec[i]) / vec[i])
    psi = H.state(vec / np.sqrt(H.grid.dx**2 * np.vdot(vec, vec).real))
    _, res = H.residual(psi, u)
    if res >= 100 * tol:
        raise ConvergenceFailure("two-particle stationary state residual too large", res)
    return psi


def _gaussian_guess(H: TwoParticleHamiltonian, odd: bool) -> np.ndarray:
    x1, x2 = H.grid.mesh()
    width = 0.25 * (H.grid.axis.x_max - H.grid.axis.x_min) / 4
    g = np.exp(-(x1**2 + x2**2) / (2 * width**2)).astype(complex)
    return (x1 + x2) * g if odd else g


def ground_state_2d(H: TwoParticleHamiltonian, u, tol: float = 1e-9, imaginary_steps: int = 200,
                    dtau: float = 1e-3) -> StateVector:
    """Lowest exchange-symmetric stationary state.

    Imaginary-time split-step with renormalization provides the starting
    vector; a Lanczos solve removes the time-step bias of that fixed point.
    """
    guess = _imaginary_time(H, u, _gaussian_guess(H, False), [], imaginary_steps, dtau)
    return _symmetric_eigenstate(H, u, 0, tol, [guess])


def first_excited_state_2d(H: TwoParticleHamiltonian, u, tol: float = 1e-9, imaginary_steps: int = 200,
                           dtau: float = 1e-3) -> StateVector:
    """Second exchange-symmetric stationary state."""
    ground = ground_state_2d(H, u, tol, imaginary_steps, dtau)
    guess = _imaginary_time(H, u, _gaussian_guess(H, True), [ground.amplitudes], imaginary_steps, dtau)
    return _symmetric_eigenstate(H, u, 1, tol, [ground.amplitudes, guess])
