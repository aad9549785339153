"""Forward trajectories and their discrete adjoints for every backend.

Cotangents follow the convention ``dJ = Re sum(conj(lam) * dpsi)`` on raw
amplitude arrays.  The physical costate is ``chi = -1j * lam / weight``, so
that ``chi(T) = 1j * <psi_t|psi(T)> psi_t``.

The adjoint sweeps differentiate the *discretized* propagators, so the
resulting control derivatives agree with finite differences of the computed
cost up to round-off (and, for Krylov propagation, the Lanczos truncation).
"""
from __future__ import annotations

import numpy as np

from ..core import fftn, ifftn, kinetic_symbol
from ..errors import InvalidArgument
from ..gpe import GpeHamiltonian, split_step_array
from ..lattice import FewModeHamiltonian, LatticeHamiltonian, dense_decompose, krylov_decompose
from ..pair import TwoParticleHamiltonian

_GL_X, _GL_W = np.polynomial.legendre.leggauss(4)
GL_NODES = 0.5 * (_GL_X + 1.0)
GL_WEIGHTS = 0.5 * _GL_W


def _kick_adjoint(lam_y, x, phase, beta, half_dt):
    """Transpose of ``x -> exp(-i (v + beta |x|^2) half_dt) x`` at ``x``.

    ``phase`` is ``exp(+i (v + beta |x|^2) half_dt)``.
    """
    mu = phase * lam_y
    if beta == 0.0:
        return mu
    return mu + (2.0 * beta * half_dt) * np.imag(np.conj(mu) * x) * x


class SplitStepDynamics:
    """Strang split-step propagation on a 1D or two-particle grid."""

    def __init__(self, kin_factor, grid, ndim, potential, potential_derivative, beta, dt, weight):
        self.k2 = kinetic_symbol(grid, ndim)
        self.kin_factor = kin_factor
        self.potential = potential
        self.potential_derivative = potential_derivative
        self.beta = float(beta)
        self.dt = float(dt)
        self.weight = float(weight)
        self.phase = np.exp(-1j * kin_factor * self.k2 * dt)
        self.grid_axes = tuple(range(-ndim, 0))

    def potentials(self, u: np.ndarray) -> np.ndarray:
        return np.stack([self.potential(row) for row in u])

    def midpoint_potentials(self, u: np.ndarray) -> np.ndarray:
        v = self.potentials(u)
        return 0.5 * (v[1:] + v[:-1])

    def prepare(self, u: np.ndarray):
        """Midpoint potentials and, without nonlinearity, the half-step kick factors."""
        v = self.midpoint_potentials(u)
        kick = np.exp(-0.5j * self.dt * v) if self.beta == 0.0 else None
        return v, kick

    def forward(self, psi0: np.ndarray, u: np.ndarray, prepared=None) -> np.ndarray:
        v_mid, kick = self.prepare(u) if prepared is None else prepared
        traj = np.empty((u.shape[0],) + psi0.shape, dtype=complex)
        traj[0] = psi0
        axes = self.grid_axes
        for i in range(u.shape[0] - 1):
            if kick is None:
                traj[i + 1] = split_step_array(traj[i], v_mid[i], self.beta, self.phase, self.dt)
            else:
                k = kick[i]
                traj[i + 1] = k * ifftn(self.phase * fftn(k * traj[i], axes=axes), axes=axes)
        return traj

    def hold(self, psi: np.ndarray, u_row: np.ndarray, n_steps: int) -> np.ndarray:
        u = np.repeat(np.atleast_2d(u_row), n_steps + 1, axis=0)
        return self.forward(psi, u)

    def backward(self, traj: np.ndarray, u: np.ndarray, lam_T: np.ndarray, prepared=None, keep=False):
        """Return ``dJ/du`` (shape of ``u``) and optionally the cotangent trajectory."""
        v_mid, kick = self.prepare(u) if prepared is None else prepared
        n = u.shape[0]
        c = 0.5 * self.dt
        beta = self.beta
        conj_phase = np.conj(self.phase)
        axes = self.grid_axes
        grad = np.zeros_like(u)
        lams = np.empty_like(traj) if keep else None
        lam = lam_T
        if keep:
            lams[-1] = lam
        d_next = self.potential_derivative(u[-1])
        for i in range(n - 2, -1, -1):
            psi_i, psi_n = traj[i], traj[i + 1]
            # second half-kick acted on b, with |b| = |psi_{i+1}|
            if kick is None:
                ph2 = np.exp(1j * c * (v_mid[i] + beta * np.abs(psi_n) ** 2))
            else:
                ph2 = np.conj(kick[i])
            dv = c * np.imag(np.conj(lam) * psi_n)
            lam = _kick_adjoint(lam, ph2 * psi_n, ph2, beta, c)
            lam = ifftn(conj_phase * fftn(lam, axes=axes), axes=axes)
            if kick is None:
                ph1 = np.exp(1j * c * (v_mid[i] + beta * np.abs(psi_i) ** 2))
            else:
                ph1 = ph2
            dv = dv + c * np.imag(np.conj(lam) * (np.conj(ph1) * psi_i))
            lam = _kick_adjoint(lam, psi_i, ph1, beta, c)
            d_now = self.potential_derivative(u[i])
            # v_mid = (V(u_i) + V(u_{i+1}))/2
            grad[i] += 0.5 * np.sum(d_now * dv, axis=axes)
            grad[i + 1] += 0.5 * np.sum(d_next * dv, axis=axes)
            d_next = d_now
            if keep:
                lams[i] = lam
        return grad, lams


class MatrixDynamics:
    """Propagation with ``exp(-i H(u_mid) dt)`` for lattice and few-mode models.

    ``krylov_order=None`` exponentiates densely (small models); otherwise a
    Lanczos projection of that order is used per step.
    """

    def __init__(self, hamiltonian, derivative, dt, krylov_order=None):
        self.hamiltonian = hamiltonian
        self.derivative = derivative
        self.dt = float(dt)
        self.krylov_order = krylov_order
        self.weight = 1.0

    def _decompose(self, H, v):
        if self.krylov_order is None:
            return dense_decompose(H.toarray() if hasattr(H, "toarray") else H, v)
        return krylov_decompose(H, v, self.krylov_order)

    @staticmethod
    def _midpoints(u):
        return 0.5 * (u[1:] + u[:-1])

    def forward(self, psi0, u, prepared=None):
        traj = np.empty((u.shape[0],) + psi0.shape, dtype=complex)
        traj[0] = psi0
        for i, um in enumerate(self._midpoints(u)):
            traj[i + 1] = self._decompose(self.hamiltonian(um), traj[i]).evolve(self.dt)
        return traj

    def hold(self, psi, u_row, n_steps):
        u = np.repeat(np.atleast_2d(u_row), n_steps + 1, axis=0)
        return self.forward(psi, u)

    def backward(self, traj, u, lam_T, prepared=None, keep=False):
        dt = self.dt
        grad = np.zeros_like(u)
        lams = np.empty_like(traj) if keep else None
        lam = lam_T
        if keep:
            lams[-1] = lam
        mids = self._midpoints(u)
        for i in range(u.shape[0] - 2, -1, -1):
            H = self.hamiltonian(mids[i])
            fwd = self._decompose(H, traj[i])
            bwd = self._decompose(H, lam)
            dHs = self.derivative(mids[i])
            dJ = np.zeros(u.shape[1])
            # Frechet derivative of exp(-i H dt) by Gauss-Legendre quadrature
            for s, w in zip(GL_NODES, GL_WEIGHTS):
                psi_s = fwd.evolve(s * dt)
                lam_s = bwd.evolve(-(1.0 - s) * dt)
                for f, dH in enumerate(dHs):
                    dJ[f] += w * np.vdot(lam_s, dH @ psi_s).imag
            dJ *= dt
            grad[i] += 0.5 * dJ
            grad[i + 1] += 0.5 * dJ
            lam = bwd.evolve(-dt)
            if keep:
                lams[i] = lam
        return grad, lams


def _phi1(z):
    """``(exp(z) - 1) / z`` with a series near zero."""
    small = np.abs(z) < 1e-5
    zs = np.where(small, 1.0, z)
    return np.where(small, 1.0 + z / 2 + z * z / 6, (np.exp(zs) - 1.0) / zs)


class DenseDynamics:
    """Exact propagators ``exp(-i H(u_mid) dt)`` from batched eigendecompositions.

    Gradients use the closed-form Frechet derivative in the eigenbasis
    (divided differences of ``exp(-i lambda dt)``).
    """

    def __init__(self, hamiltonian, derivative, dt):
        self.hamiltonian = hamiltonian
        self.derivative = derivative
        self.dt = float(dt)
        self.weight = 1.0
        self._cache_key = None
        self._cache = None

    def _eig(self, u):
        key = u.tobytes()
        if key != self._cache_key:
            mids = 0.5 * (u[1:] + u[:-1])
            Hs = np.stack([np.asarray(self.hamiltonian(m), dtype=complex) for m in mids])
            self._cache = np.linalg.eigh(Hs)
            self._cache_key = key
        return self._cache

    def forward(self, psi0, u, prepared=None):
        vals, vecs = self._eig(u)
        phases = np.exp(-1j * vals * self.dt)
        traj = np.empty((u.shape[0],) + psi0.shape, dtype=complex)
        traj[0] = psi0
        for i in range(u.shape[0] - 1):
            v = vecs[i]
            traj[i + 1] = v @ (phases[i] * (v.conj().T @ traj[i]))
        return traj

    def hold(self, psi, u_row, n_steps):
        u = np.repeat(np.atleast_2d(u_row), n_steps + 1, axis=0)
        return self.forward(psi, u)

    def backward(self, traj, u, lam_T, prepared=None, keep=False):
        vals, vecs = self._eig(u)
        dt = self.dt
        n = u.shape[0]
        phases = np.exp(-1j * vals * dt)
        lams = np.empty_like(traj)
        lams[-1] = lam_T
        for i in range(n - 2, -1, -1):
            v = vecs[i]
            lams[i] = v @ (np.conj(phases[i]) * (v.conj().T @ lams[i + 1]))
        # divided differences f[l_j, l_k] of f(l) = exp(-i l dt)
        diff = vals[:, :, None] - vals[:, None, :]
        F = phases[:, None, :] * (-1j * dt) * _phi1(-1j * diff * dt)
        vh = np.conj(np.swapaxes(vecs, 1, 2))
        lam_t = np.einsum("ijk,ik->ij", vh, lams[1:])
        psi_t = np.einsum("ijk,ik->ij", vh, traj[:-1])
        mids = 0.5 * (u[1:] + u[:-1])
        dJ = np.empty((n - 1, u.shape[1]))
        for i in range(n - 1):
            w = np.conj(lam_t[i])[:, None] * F[i] * psi_t[i][None, :]
            for f, dH in enumerate(self.derivative(mids[i])):
                E = vh[i] @ np.asarray(dH) @ vecs[i]
                dJ[i, f] = np.sum(w * E).real
        grad = np.zeros_like(u)
        grad[:-1] += 0.5 * dJ
        grad[1:] += 0.5 * dJ
        return grad, (lams if keep else None)


def _diag_derivative(fn, n_fields):
    """Wrap a user dH/du returning arrays/DiagonalOperators into the stacked form."""

    def wrapped(u_row):
        arg = float(u_row[0]) if n_fields == 1 else u_row
        d = fn(arg)
        if n_fields == 1:
            d = [d]
        return np.stack([np.asarray(getattr(x, "values", x), dtype=float) for x in d])

    return wrapped


def make_dynamics(hamiltonian, dt: float, dHdu=None, krylov_order: int = 4):
    if isinstance(hamiltonian, GpeHamiltonian):
        pot = hamiltonian.potential
        deriv = pot.derivative if dHdu is None else _diag_derivative(dHdu, pot.n_fields)
        return SplitStepDynamics(hamiltonian.kin_factor, hamiltonian.grid, 1, pot.values, deriv,
                                 hamiltonian.beta, dt, hamiltonian.grid.dx)
    if isinstance(hamiltonian, TwoParticleHamiltonian):
        if dHdu is None:
            deriv = hamiltonian.potential_derivative
        else:
            single = _diag_derivative(dHdu, hamiltonian.n_fields)

            def deriv(u_row):
                d = single(u_row)
                return d[:, :, None] + d[:, None, :]
        return SplitStepDynamics(hamiltonian.kin_factor, hamiltonian.grid.axis, 2,
                                 hamiltonian.potential_values, deriv, 0.0, dt, hamiltonian.grid.dx**2)
    dense = isinstance(hamiltonian, FewModeHamiltonian)
    if dense:
        order = None
    elif isinstance(hamiltonian, LatticeHamiltonian):
        order = krylov_order
    elif callable(hamiltonian) and hasattr(hamiltonian, "derivative"):
        order = krylov_order
    else:
        raise InvalidArgument(f"no propagator for {type(hamiltonian).__name__}")
    if dHdu is None:
        derivative = hamiltonian.derivative
    else:
        n_fields = hamiltonian.n_fields

        def derivative(u_row):
            d = dHdu(float(u_row[0]) if n_fields == 1 else u_row)
            return [d] if n_fields == 1 else list(d)
    if dense:
        return DenseDynamics(hamiltonian, derivative, dt)
    return MatrixDynamics(hamiltonian, derivative, dt, order)
