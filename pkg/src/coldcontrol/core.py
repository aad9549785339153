"""Grids, state vectors and the elementary operators every model is built from.

Spatial grids are closed intervals: ``n`` points including both endpoints, so
``dx = (x_max - x_min) / (n - 1)``.  Spectral operations treat the sampled
signal as periodic, which is harmless as long as states vanish at the edges.
Inner products use the rectangle rule with weight ``dx`` (``dx**2`` on the
two-particle grid and ``1`` for discrete bases).
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import scipy.fft
import scipy.sparse as sp

from .errors import InvalidArgument, NumericalInconsistency

BasisTag = Literal["spatial-1d", "spatial-2d", "fock", "few-mode"]

MIN_GRID_POINTS = 8


def fft_workers() -> int:
    """Thread count handed to scipy.fft, capped by ``QOC_THREADS`` (0 = auto)."""
    value = os.environ.get("QOC_THREADS", "0").strip() or "0"
    try:
        n = int(value)
    except ValueError:
        return 1
    return n if n > 0 else (os.cpu_count() or 1)


def fftn(a, axes=None):
    return scipy.fft.fftn(a, axes=axes, workers=fft_workers())


def ifftn(a, axes=None):
    return scipy.fft.ifftn(a, axes=axes, workers=fft_workers())


@dataclass(frozen=True)
class SpatialGrid:
    x_min: float
    x_max: float
    n: int

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n)

    @property
    def k(self) -> np.ndarray:
        """Angular wavenumbers in FFT ordering, spacing ``2*pi/(n*dx)``."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)


def make_spatial_grid(x_min: float, x_max: float, n: int) -> SpatialGrid:
    if not (np.isfinite(x_min) and np.isfinite(x_max)) or x_max <= x_min:
        raise InvalidArgument(f"need x_min < x_max, got ({x_min}, {x_max})")
    if int(n) != n or n < MIN_GRID_POINTS:
        raise InvalidArgument(f"need an integer n >= {MIN_GRID_POINTS}, got {n}")
    return SpatialGrid(float(x_min), float(x_max), int(n))


@dataclass(frozen=True)
class TimeGrid:
    dt: float
    n_steps: int
    duration: float

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps) * self.dt


def n_steps_for(duration: float, dt: float) -> int:
    # floor(duration/dt) + 1; the guard absorbs round-off such as 2.2/0.002
    return int(math.floor(duration / dt + 1e-9)) + 1


def make_time_grid(duration: float, dt: float) -> TimeGrid:
    if dt <= 0 or duration <= 0:
        raise InvalidArgument("duration and dt must be positive")
    return TimeGrid(float(dt), n_steps_for(duration, dt), float(duration))


_WEIGHTED_BASES = ("spatial-1d", "spatial-2d")


@dataclass(frozen=True, eq=False)
class StateVector:
    """Complex amplitudes plus the quadrature weight of their basis.

    ``weight`` is ``dx`` for a 1D grid, ``dx**2`` for the two-particle grid
    and 1 otherwise, so that ``norm()**2 = weight * sum(|a|**2)``.
    """

    amplitudes: np.ndarray
    basis: BasisTag = "fock"
    weight: float = 1.0
    grid: object = field(default=None, repr=False)

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex)
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def on_grid(cls, amplitudes, grid: SpatialGrid, two_particle: bool = False):
        if two_particle:
            return cls(amplitudes, "spatial-2d", grid.dx**2, grid)
        return cls(amplitudes, "spatial-1d", grid.dx, grid)

    def norm(self) -> float:
        return math.sqrt(self.weight * float(np.vdot(self.amplitudes, self.amplitudes).real))

    def normalized(self) -> "StateVector":
        return self.with_amplitudes(self.amplitudes / self.norm())

    def with_amplitudes(self, amplitudes) -> "StateVector":
        return StateVector(amplitudes, self.basis, self.weight, self.grid)

    def __len__(self):
        return self.amplitudes.size


def _check_compatible(a: StateVector, b: StateVector):
    if a.basis != b.basis or a.amplitudes.shape != b.amplitudes.shape:
        raise InvalidArgument(
            f"basis mismatch: {a.basis}{a.amplitudes.shape} vs {b.basis}{b.amplitudes.shape}")
    if not math.isclose(a.weight, b.weight, rel_tol=1e-12):
        raise InvalidArgument("states live on grids with different spacing")


def overlap(a: StateVector, b: StateVector) -> complex:
    """<a|b>, antilinear in the first argument."""
    _check_compatible(a, b)
    return complex(np.vdot(a.amplitudes, b.amplitudes) * a.weight)


def fidelity(a: StateVector, b: StateVector) -> float:
    return abs(overlap(a, b)) ** 2


@dataclass(frozen=True, eq=False)
class DiagonalOperator:
    """A real function sampled on the grid, acting by pointwise multiplication."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if not np.all(np.isfinite(v)):
            raise InvalidArgument("diagonal operator has non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def apply(self, psi: np.ndarray) -> np.ndarray:
        return self.values * psi

    def __add__(self, other):
        if isinstance(other, DiagonalOperator):
            return DiagonalOperator(self.values + other.values)
        return DiagonalOperator(self.values + other)

    __radd__ = __add__

    def __mul__(self, scalar):
        return DiagonalOperator(self.values * scalar)

    __rmul__ = __mul__


# 4th-order central stencil for d^2/dx^2
_D2_STENCIL = np.array([-1.0 / 12, 4.0 / 3, -5.0 / 2, 4.0 / 3, -1.0 / 12])


@dataclass(frozen=True)
class BandedKineticOperator:
    """``-kin_factor * d^2/dx^2`` as a symmetric 5-diagonal matrix.

    Rows near the edges keep the central stencil and drop the entries that
    would fall outside the grid (zero boundary values), which keeps the matrix
    symmetric and banded.
    """

    kin_factor: float
    dx: float
    n: int

    @property
    def coefficients(self) -> np.ndarray:
        return -self.kin_factor * _D2_STENCIL / self.dx**2

    def matrix(self) -> sp.csr_matrix:
        c = self.coefficients
        diags = [np.full(self.n - abs(off), c[off + 2]) for off in range(-2, 3)]
        return sp.diags(diags, list(range(-2, 3)), format="csr")

    def dense(self) -> np.ndarray:
        return self.matrix().toarray()

    def lower_banded(self) -> np.ndarray:
        """Lower banded storage for ``scipy.linalg.eig_banded``."""
        c = self.coefficients
        band = np.zeros((3, self.n))
        band[0, :] = c[2]
        band[1, :-1] = c[3]
        band[2, :-2] = c[4]
        return band

    def apply(self, psi: np.ndarray) -> np.ndarray:
        c = self.coefficients
        out = c[2] * psi
        out[1:] += c[1] * psi[:-1]
        out[:-1] += c[3] * psi[1:]
        out[2:] += c[0] * psi[:-2]
        out[:-2] += c[4] * psi[2:]
        return out


def kinetic_operator(grid: SpatialGrid, kin_factor: float) -> BandedKineticOperator:
    return BandedKineticOperator(float(kin_factor), grid.dx, grid.n)


def _is_hermitian(a, tol=1e-12) -> bool:
    if sp.issparse(a):
        diff = abs(a - a.conj().T)
        worst = diff.max() if diff.nnz else 0.0
        scale = max(1.0, abs(a).max() if a.nnz else 0.0)
    else:
        a = np.asarray(a)
        worst = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
        scale = max(1.0, np.max(np.abs(a)) if a.size else 0.0)
    return worst <= tol * scale


def expectation_value(op, psi: StateVector) -> float:
    """<psi|op|psi> for a diagonal, banded-kinetic, sparse or dense Hermitian operator."""
    a = psi.amplitudes
    if isinstance(op, DiagonalOperator):
        if op.values.shape != a.shape:
            raise InvalidArgument("operator and state sizes differ")
        return float(psi.weight * np.sum(op.values * np.abs(a) ** 2))
    if isinstance(op, BandedKineticOperator):
        if a.ndim != 1 or op.n != a.size:
            raise InvalidArgument("kinetic operator and state sizes differ")
        value = psi.weight * np.vdot(a, op.apply(a.copy()))
    else:
        if op.shape != (a.size, a.size):
            raise InvalidArgument(f"operator shape {op.shape} does not fit state of size {a.size}")
        if not _is_hermitian(op):
            raise InvalidArgument("expectation value requested for a non-Hermitian operator")
        value = psi.weight * np.vdot(a.ravel(), op @ a.ravel())
    if abs(value.imag) > 1e-8 * max(1.0, abs(value.real)):
        raise NumericalInconsistency(f"imaginary residue {value.imag:.3e} in expectation value")
    return float(value.real)


def apply_kinetic_spectral(psi: StateVector, kin_factor: float) -> StateVector:
    """Spectral action of ``-kin_factor * d^2/dx^2`` (all axes for 2D states)."""
    if psi.basis not in _WEIGHTED_BASES or psi.grid is None:
        raise InvalidArgument("spectral kinetic operator needs a state on a spatial grid")
    k2 = kinetic_symbol(psi.grid, psi.amplitudes.ndim)
    return psi.with_amplitudes(ifftn(kin_factor * k2 * fftn(psi.amplitudes)))


def kinetic_symbol(grid: SpatialGrid, ndim: int = 1) -> np.ndarray:
    """|k|^2 on a 1D grid or on the tensor grid of ``ndim`` identical axes."""
    k2 = grid.k**2
    if ndim == 1:
        return k2
    if ndim == 2:
        return k2[:, None] + k2[None, :]
    raise InvalidArgument("only 1D and two-particle grids are supported")
