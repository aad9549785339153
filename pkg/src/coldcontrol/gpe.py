"""Gross-Pitaevskii and single-particle Hamiltonians on a 1D grid.

Time stepping is Strang split-step Fourier with the control entering through
the average of the potential at the two ends of the step.  Stationary states
are computed self-consistently with the 5-diagonal kinetic matrix.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .core import (
    DiagonalOperator,
    SpatialGrid,
    StateVector,
    fftn,
    ifftn,
    kinetic_operator,
)
from .errors import ConvergenceFailure, InvalidArgument

log = logging.getLogger(__name__)


def anharmonic_potential(grid: SpatialGrid, u: float, p2: float, p4: float, p6: float) -> DiagonalOperator:
    s2 = (grid.x - u) ** 2
    return DiagonalOperator(p2 * s2 + p4 * s2**2 + p6 * s2**3)


def anharmonic_potential_derivative(grid: SpatialGrid, u: float, p2: float, p4: float, p6: float) -> DiagonalOperator:
    """Analytic d/du of :func:`anharmonic_potential`."""
    s = grid.x - u
    s2 = s * s
    return DiagonalOperator(-(2 * p2 * s + 4 * p4 * s * s2 + 6 * p6 * s * s2 * s2))


def fd_step(u) -> float:
    return 1e-6 * max(1.0, abs(u))


class PotentialFunction:
    """Control-dependent potential ``V(x, u)``.

    ``fn`` maps a control value to potential samples on the grid.  With a single
    control field it receives a float; with several it receives a 1D array.
    ``derivative`` has the same signature and returns dV/du (one array per
    field when there are several); without it a central difference is used.
    """

    def __init__(self, fn: Callable, initial=0.0, derivative: Optional[Callable] = None, n_fields: int = 1):
        self.fn = fn
        self.derivative_fn = derivative
        self.n_fields = int(n_fields)
        self.initial = initial

    def _arg(self, u):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if u.size != self.n_fields:
            raise InvalidArgument(f"expected {self.n_fields} control values, got {u.size}")
        return float(u[0]) if self.n_fields == 1 else u

    def values(self, u) -> np.ndarray:
        return np.asarray(self.fn(self._arg(u)), dtype=float)

    def __call__(self, u) -> DiagonalOperator:
        return DiagonalOperator(self.values(u))

    @property
    def has_analytic_derivative(self) -> bool:
        return self.derivative_fn is not None

    def derivative(self, u) -> np.ndarray:
        """dV/du stacked over control fields, shape ``(n_fields, *grid_shape)``."""
        arg = self._arg(u)
        if self.derivative_fn is not None:
            d = self.derivative_fn(arg)
            if self.n_fields == 1:
                return np.asarray(d, dtype=float)[None]
            return np.stack([np.asarray(di, dtype=float) for di in d])
        u = np.atleast_1d(np.asarray(u, dtype=float))
        out = []
        for f in range(self.n_fields):
            h = fd_step(u[f])
            up, dn = u.copy(), u.copy()
            up[f] += h
            dn[f] -= h
            out.append((self.values(up) - self.values(dn)) / (2 * h))
        return np.stack(out)


def make_potential_function(fn, initial=0.0, derivative=None, n_fields=1) -> PotentialFunction:
    return PotentialFunction(fn, initial, derivative, n_fields)


def anharmonic_potential_function(grid: SpatialGrid, p2, p4, p6, initial=0.0) -> PotentialFunction:
    return PotentialFunction(
        lambda u: anharmonic_potential(grid, u, p2, p4, p6).values,
        initial,
        derivative=lambda u: anharmonic_potential_derivative(grid, u, p2, p4, p6).values,
    )


@dataclass(frozen=True, eq=False)
class GpeHamiltonian:
    """``-kin_factor d^2/dx^2 + V(x, u) + beta |psi|^2``; ``beta = 0`` is one particle."""

    grid: SpatialGrid
    kin_factor: float
    potential: PotentialFunction
    beta: float = 0.0

    def __post_init__(self):
        if self.beta < 0:
            raise InvalidArgument("nonlinearity must be non-negative")

    @property
    def kinetic(self):
        return kinetic_operator(self.grid, self.kin_factor)

    @property
    def n_fields(self) -> int:
        return self.potential.n_fields

    def state(self, amplitudes) -> StateVector:
        return StateVector.on_grid(amplitudes, self.grid)

    def apply(self, psi: np.ndarray, u) -> np.ndarray:
        """H[psi] psi using the banded kinetic matrix."""
        return self.kinetic.apply(psi) + (self.potential.values(u) + self.beta * np.abs(psi) ** 2) * psi

    def energy(self, psi: StateVector, u, kinetic: str = "banded") -> float:
        """Energy functional ``<T> + <V> + beta/2 * int |psi|^4``."""
        a = psi.amplitudes
        if kinetic == "banded":
            t = np.vdot(a, self.kinetic.apply(a.copy())).real
        elif kinetic == "spectral":
            t = np.vdot(a, ifftn(self.kin_factor * self.grid.k**2 * fftn(a))).real
        else:
            raise InvalidArgument(f"unknown kinetic form {kinetic!r}")
        dens = np.abs(a) ** 2
        v = np.sum(self.potential.values(u) * dens)
        return float(psi.weight * (t + v + 0.5 * self.beta * np.sum(dens**2)))

    def residual(self, psi: StateVector, u) -> tuple[float, float]:
        """Chemical potential and ``||(H[psi] - mu) psi||``."""
        a = psi.amplitudes
        ha = self.apply(a, u)
        mu = float(psi.weight * np.vdot(a, ha).real)
        return mu, float(np.sqrt(psi.weight) * np.linalg.norm(ha - mu * a))

    def ground_state(self, u=None, tol: float = 1e-10) -> StateVector:
        return ground_state(self, self.potential.initial if u is None else u, tol)

    def first_excited_state(self, u=None, tol: float = 1e-10) -> StateVector:
        return first_excited_state(self, self.potential.initial if u is None else u, tol)


def _kick(a, v, beta, half_dt):
    return np.exp(-1j * half_dt * (v + beta * (a.real**2 + a.imag**2))) * a


def split_step_array(a, v_mid, beta, kinetic_phase, dt):
    """One Strang step on raw amplitudes; ``kinetic_phase = exp(-i T(k) dt)``.

    The first nonlinear half-kick uses the incoming density, the second the
    density after the kinetic drift.
    """
    a = _kick(a, v_mid, beta, 0.5 * dt)
    a = ifftn(kinetic_phase * fftn(a))
    return _kick(a, v_mid, beta, 0.5 * dt)


def split_step(psi: StateVector, H: GpeHamiltonian, u_now, u_next, dt: float) -> StateVector:
    if dt <= 0:
        raise InvalidArgument("dt must be positive")
    if psi.basis != "spatial-1d" or psi.amplitudes.shape != (H.grid.n,):
        raise InvalidArgument("state does not live on the Hamiltonian's grid")
    v_mid = 0.5 * (H.potential.values(u_now) + H.potential.values(u_next))
    phase = np.exp(-1j * H.kin_factor * H.grid.k**2 * dt)
    return psi.with_amplitudes(split_step_array(psi.amplitudes, v_mid, H.beta, phase, dt))


def _fix_sign(v: np.ndarray) -> np.ndarray:
    # deterministic global phase: largest-magnitude entry positive
    i = int(np.argmax(np.abs(v)))
    return v if v[i] >= 0 else -v


def _self_consistent_state(H: GpeHamiltonian, u, level: int, tol: float, max_iter: int = 2000) -> StateVector:
    if tol <= 0:
        raise InvalidArgument("tol must be positive")
    grid = H.grid
    v = H.potential.values(u)
    band = H.kinetic.lower_banded()
    t_diag = band[0].copy()
    rho = None
    mix = 0.5
    prev_energy = np.inf
    prev_res = np.inf
    res = np.inf
    for it in range(max_iter):
        band[0] = t_diag + v + (0.0 if rho is None else H.beta * rho)
        _, vec = scipy.linalg.eig_banded(band, lower=True, select="i", select_range=(level, level))
        phi = _fix_sign(vec[:, 0]) / np.sqrt(grid.dx)
        psi = H.state(phi)
        energy = H.energy(psi, u)
        _, res = H.residual(psi, u)
        if abs(energy - prev_energy) < tol and res < 100 * tol:
            log.debug("stationary state level %d converged in %d iterations", level, it)
            return psi
        if H.beta == 0.0:
            rho = phi**2
            prev_energy = energy
            continue
        # adaptive damping of the density update
        mix = min(1.0, mix * 1.25) if res < prev_res else max(0.02, mix * 0.5)
        rho = phi**2 if rho is None else (1 - mix) * rho + mix * phi**2
        prev_energy, prev_res = energy, res
    raise ConvergenceFailure(f"stationary state (level {level}) did not converge in {max_iter} iterations", res)


def ground_state(H: GpeHamiltonian, u, tol: float = 1e-10) -> StateVector:
    return _self_consistent_state(H, u, 0, tol)


def first_excited_state(H: GpeHamiltonian, u, tol: float = 1e-10) -> StateVector:
    """Lowest stationary state with one node.

    Only the two lowest levels are supported for the nonlinear problem.
    """
    return _self_consistent_state(H, u, 1, tol)


def excited_state(H: GpeHamiltonian, u, level: int, tol: float = 1e-10) -> StateVector:
    if level not in (0, 1):
        raise InvalidArgument("only the ground and first excited GPE states are available")
    return _self_consistent_state(H, u, level, tol)
