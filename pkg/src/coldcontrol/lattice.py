"""Bose-Hubbard lattices in a fixed-particle-number Fock basis, and dense few-mode models."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg

from .core import StateVector
from .errors import CapacityError, ConvergenceFailure, DomainError, InvalidArgument

MAX_FOCK_DIMENSION = 5_000_000
DENSE_EIGEN_LIMIT = 512


@dataclass(frozen=True, eq=False)
class FockBasis:
    """All occupations of ``n_sites`` sites by ``n_particles`` bosons.

    States are stored in descending lexicographic order, starting with
    ``(N, 0, ..., 0)``.
    """

    n_sites: int
    n_particles: int
    states: np.ndarray

    @property
    def dimension(self) -> int:
        return self.states.shape[0]

    def __len__(self):
        return self.dimension

    @cached_property
    def _radix(self) -> np.ndarray:
        base = self.n_particles + 1
        return base ** np.arange(self.n_sites - 1, -1, -1, dtype=np.int64)

    @cached_property
    def _keys(self) -> np.ndarray:
        # descending lexicographic order <=> descending keys; store ascending
        return (self.states @ self._radix)[::-1]

    def _lookup(self, occupations: np.ndarray) -> np.ndarray:
        keys = occupations @ self._radix
        pos = np.searchsorted(self._keys, keys)
        return self.dimension - 1 - pos

    def index(self, occupation: Sequence[int]) -> int:
        occ = np.asarray(occupation, dtype=np.int64)
        if occ.shape != (self.n_sites,) or occ.sum() != self.n_particles or np.any(occ < 0):
            raise InvalidArgument(f"{tuple(occupation)} is not a state of this basis")
        return int(self._lookup(occ[None])[0])

    def state(self, occupation: Sequence[int]) -> StateVector:
        a = np.zeros(self.dimension, dtype=complex)
        a[self.index(occupation)] = 1.0
        return StateVector(a, "fock")

    def _transition(self, src: int, dst: int):
        """Rows where one boson can hop src -> dst, their targets and amplitudes."""
        rows = np.nonzero(self.states[:, src] > 0)[0]
        occ = self.states[rows].copy()
        amp = np.sqrt(occ[:, src] * (occ[:, dst] + 1.0))
        occ[:, src] -= 1
        occ[:, dst] += 1
        return rows, self._lookup(occ), amp


def _enumerate(n_sites: int, n_particles: int) -> np.ndarray:
    if n_sites == 1:
        return np.array([[n_particles]], dtype=np.int64)
    blocks = []
    for first in range(n_particles, -1, -1):
        rest = _enumerate(n_sites - 1, n_particles - first)
        blocks.append(np.hstack([np.full((rest.shape[0], 1), first, dtype=np.int64), rest]))
    return np.vstack(blocks)


def fock_dimension(n_sites: int, n_particles: int) -> int:
    return math.comb(n_particles + n_sites - 1, n_sites - 1)


def make_fock_basis(n_sites: int, n_particles: int, max_dimension: int = MAX_FOCK_DIMENSION) -> FockBasis:
    if n_sites < 1 or n_particles < 1:
        raise InvalidArgument("need at least one site and one particle")
    dim = fock_dimension(n_sites, n_particles)
    if dim > max_dimension:
        raise CapacityError(f"Fock dimension {dim} exceeds the cap of {max_dimension}")
    return FockBasis(int(n_sites), int(n_particles), _enumerate(n_sites, n_particles))


def hopping_operator(basis: FockBasis, periodic: bool = False) -> sp.csr_matrix:
    """Sum over bonds of ``a_{i+1}^dag a_i + h.c.``.

    The wrap-around bond is added only for three or more sites; with two sites
    it would duplicate the single open bond.
    """
    bonds = [(i, i + 1) for i in range(basis.n_sites - 1)]
    if periodic and basis.n_sites > 2:
        bonds.append((basis.n_sites - 1, 0))
    rows, cols, vals = [], [], []
    for i, j in bonds:
        src_rows, dst_rows, amp = basis._transition(i, j)
        rows += [dst_rows, src_rows]
        cols += [src_rows, dst_rows]
        vals += [amp, amp]
    d = basis.dimension
    if not rows:
        return sp.csr_matrix((d, d))
    op = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(d, d))
    return op.tocsr()


def onsite_operator(basis: FockBasis) -> sp.csr_matrix:
    n = basis.states
    return sp.diags((n * (n - 1)).sum(axis=1).astype(float), format="csr")


def number_operator(basis: FockBasis, site: int) -> sp.csr_matrix:
    return sp.diags(basis.states[:, site].astype(float), format="csr")


def site_potential_operator(basis: FockBasis, potential) -> sp.csr_matrix:
    v = np.asarray(potential, dtype=float)
    if v.shape != (basis.n_sites,):
        raise InvalidArgument(f"need one potential value per site ({basis.n_sites}), got shape {v.shape}")
    return sp.diags(basis.states @ v, format="csr")


def site_densities(psi: StateVector, basis: FockBasis) -> np.ndarray:
    """<n_i> for every site."""
    return (np.abs(psi.amplitudes) ** 2) @ basis.states


class BoundTransform:
    """Maps an unbounded control ``u`` onto ``(U_min, U_max)`` via ``A (tanh u + B)``."""

    def __init__(self, U_min: float, U_max: float):
        if not 0 < U_min < U_max:
            raise InvalidArgument("need 0 < U_min < U_max")
        self.U_min = float(U_min)
        self.U_max = float(U_max)
        r = U_min / U_max
        self.B = (1 + r) / (1 - r)
        self.A = U_max / (1 + self.B)

    def __call__(self, u):
        return self.A * (np.tanh(u) + self.B)

    def derivative(self, u):
        return self.A / np.cosh(u) ** 2

    def inverse(self, U):
        U = np.asarray(U, dtype=float)
        if np.any(U <= self.U_min) or np.any(U >= self.U_max):
            raise DomainError(f"values outside ({self.U_min}, {self.U_max}) cannot be inverted")
        out = np.arctanh(U / self.A - self.B)
        return float(out) if out.ndim == 0 else out


def bound_transform(u, U_min: float, U_max: float):
    return BoundTransform(U_min, U_max)(u)


def inverse_bound_transform(U, U_min: float, U_max: float):
    return BoundTransform(U_min, U_max).inverse(U)


class LatticeHamiltonian:
    """``H(u) = -J hop + sum_i V_i n_i + U(u)/2 sum_i n_i (n_i - 1)``.

    ``interaction`` maps the control to the on-site energy ``U``; pass a
    :class:`BoundTransform` or any callable.  Its derivative is taken from a
    ``derivative`` attribute when present, otherwise by central differences.
    """

    n_fields = 1

    def __init__(self, basis: FockBasis, interaction: Callable, J: float = 1.0, potential=None,
                 periodic: bool = False):
        self.basis = basis
        self.J = float(J)
        self.interaction = interaction
        self.hopping = hopping_operator(basis, periodic)
        self.onsite = onsite_operator(basis)
        self.constant = -self.J * self.hopping
        if potential is not None:
            self.constant = self.constant + site_potential_operator(basis, potential)
        self.constant = self.constant.tocsr()

    def U(self, u) -> float:
        return float(self.interaction(float(np.atleast_1d(u)[0])))

    def __call__(self, u) -> sp.csr_matrix:
        return (self.constant + (0.5 * self.U(u)) * self.onsite).tocsr()

    def dU(self, u) -> float:
        u = float(np.atleast_1d(u)[0])
        d = getattr(self.interaction, "derivative", None)
        if d is not None:
            return float(d(u))
        h = 1e-6 * max(1.0, abs(u))
        return float((self.interaction(u + h) - self.interaction(u - h)) / (2 * h))

    def derivative(self, u) -> list:
        return [(0.5 * self.dU(u)) * self.onsite]

    def ground_state(self, u, tol: float = 1e-10) -> StateVector:
        return ground_state_sparse(self(u), tol)[1]


class FewModeHamiltonian:
    """Dense ``H(u) = H0 + sum_f u_f H_f``, or a user callable with optional derivative."""

    def __init__(self, H0=None, controls: Sequence = (), fn: Optional[Callable] = None,
                 derivative: Optional[Callable] = None, n_fields: Optional[int] = None):
        if fn is None:
            self.H0 = np.asarray(H0, dtype=complex)
            self.controls = [np.asarray(h, dtype=complex) for h in controls]
            for h in [self.H0, *self.controls]:
                if not np.allclose(h, h.conj().T, atol=1e-14):
                    raise InvalidArgument("few-mode Hamiltonian terms must be Hermitian")
            self.n_fields = len(self.controls)
        else:
            if n_fields is None:
                raise InvalidArgument("n_fields is required with a callable Hamiltonian")
            self.n_fields = int(n_fields)
        self.fn = fn
        self.derivative_fn = derivative

    def __call__(self, u) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if self.fn is not None:
            return np.asarray(self.fn(u[0] if self.n_fields == 1 else u), dtype=complex)
        out = self.H0.copy()
        for uf, h in zip(u, self.controls):
            out += uf * h
        return out

    def derivative(self, u) -> list:
        if self.fn is None:
            return list(self.controls)
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if self.derivative_fn is not None:
            d = self.derivative_fn(u[0] if self.n_fields == 1 else u)
            return [np.asarray(d, dtype=complex)] if self.n_fields == 1 else [np.asarray(x) for x in d]
        out = []
        for f in range(self.n_fields):
            h = 1e-6 * max(1.0, abs(u[f]))
            up, dn = u.copy(), u.copy()
            up[f] += h
            dn[f] -= h
            out.append((self(up) - self(dn)) / (2 * h))
        return out

    @property
    def dimension(self) -> int:
        return self(np.zeros(self.n_fields)).shape[0]

    def eigenstate(self, u, level: int = 0) -> StateVector:
        _, vecs = np.linalg.eigh(self(u))
        return StateVector(_fix_phase(vecs[:, level]), "few-mode")


SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def landau_zener_hamiltonian(delta: float) -> FewModeHamiltonian:
    """``H(u) = u sigma_z + delta sigma_x``."""
    return FewModeHamiltonian(delta * SIGMA_X, [SIGMA_Z])


def _fix_phase(v: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(v)))
    return v * (abs(v[i]) / v[i])


def ground_state_sparse(H, tol: float = 1e-10) -> tuple[float, StateVector]:
    """Lowest eigenpair; dense below :data:`DENSE_EIGEN_LIMIT`, ARPACK above."""
    dim = H.shape[0]
    if dim < DENSE_EIGEN_LIMIT:
        dense = H.toarray() if sp.issparse(H) else np.asarray(H)
        vals, vecs = scipy.linalg.eigh(dense, subset_by_index=[0, 0])
    else:
        v0 = np.ones(dim) / np.sqrt(dim)
        try:
            vals, vecs = scipy.sparse.linalg.eigsh(H, k=1, which="SA", tol=tol * 1e-2, v0=v0, maxiter=10 * dim)
        except scipy.sparse.linalg.ArpackNoConvergence as exc:
            raise ConvergenceFailure("sparse ground state did not converge") from exc
    e = float(vals[0])
    v = _fix_phase(vecs[:, 0].astype(complex))
    res = float(np.linalg.norm(H @ v - e * v))
    if res >= max(tol, 1e-12 * max(1.0, abs(e))):
        raise ConvergenceFailure("sparse ground state residual too large", res)
    return e, StateVector(v, "fock")


class SpectralPropagator:
    """``exp(-i H t) v`` restricted to a small invariant(ish) subspace.

    ``basis`` columns are (approximate) eigenvectors with energies ``energies``;
    ``coefficients`` are the components of ``v`` along them.
    """

    __slots__ = ("basis", "energies", "coefficients")

    def __init__(self, basis, energies, coefficients):
        self.basis = basis
        self.energies = energies
        self.coefficients = coefficients

    def evolve(self, t: float) -> np.ndarray:
        return self.basis @ (np.exp(-1j * self.energies * t) * self.coefficients)


def krylov_decompose(H, v: np.ndarray, order: int) -> SpectralPropagator:
    """Order-``order`` Lanczos projection with full reorthogonalization.

    Stops early (smaller effective order) when the Krylov space becomes
    invariant.
    """
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        return SpectralPropagator(np.zeros((v.size, 1), complex), np.zeros(1), np.zeros(1, complex))
    Q = np.empty((v.size, order), dtype=complex)
    Q[:, 0] = v / nrm
    alpha, beta = [], []
    for j in range(order):
        w = H @ Q[:, j]
        alpha.append(np.vdot(Q[:, j], w).real)
        if j == order - 1:
            break
        w = w - Q[:, : j + 1] @ (Q[:, : j + 1].conj().T @ w)
        w = w - Q[:, : j + 1] @ (Q[:, : j + 1].conj().T @ w)
        b = np.linalg.norm(w)
        if b < 1e-14:
            break
        beta.append(b)
        Q[:, j + 1] = w / b
    m = len(alpha)
    if m == 1:
        energies, S = np.array(alpha), np.ones((1, 1))
    else:
        energies, S = scipy.linalg.eigh_tridiagonal(np.array(alpha), np.array(beta[: m - 1]))
    return SpectralPropagator(Q[:, :m] @ S, energies, nrm * S[0, :].astype(complex))


def dense_decompose(H, v: np.ndarray) -> SpectralPropagator:
    energies, W = np.linalg.eigh(np.asarray(H))
    return SpectralPropagator(W, energies, W.conj().T @ v)


def lanczos_step(H, psi: StateVector, dt: float, krylov_order: int = 4) -> StateVector:
    if krylov_order < 2:
        raise InvalidArgument("krylov order must be at least 2")
    return psi.with_amplitudes(krylov_decompose(H, psi.amplitudes, krylov_order).evolve(dt))


def single_particle_density_matrix(psi: StateVector, basis: FockBasis) -> np.ndarray:
    """``rho[i, j] = <psi| a_i^dag a_j |psi>``."""
    c = psi.amplitudes
    L = basis.n_sites
    rho = np.zeros((L, L), dtype=complex)
    rho[np.diag_indices(L)] = (np.abs(c) ** 2) @ basis.states
    for i in range(L):
        for j in range(L):
            if i == j:
                continue
            # a_i^dag a_j: one boson from j to i
            rows, targets, amp = basis._transition(j, i)
            rho[i, j] = np.sum(np.conj(c[targets]) * c[rows] * amp)
    return rho
