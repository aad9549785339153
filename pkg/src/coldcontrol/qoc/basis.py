"""Reduced control bases: shape functions, randomized sine bases and GROUP problems."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ..core import TimeGrid
from ..errors import InvalidArgument
from .control import ControlField

PLATEAU_POSITION = 0.1
RAMP_CENTER = 0.05


def _times(time_grid) -> np.ndarray:
    if isinstance(time_grid, TimeGrid):
        return time_grid.times
    if isinstance(time_grid, ControlField):
        return time_grid.times
    return np.asarray(time_grid, dtype=float).ravel()


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _plateau_value(z: float) -> float:
    """Normalized height at ``0.1 T`` for logistic slope ``a = z / (0.05 T)``."""
    r0 = _sigmoid(-z)
    return (_sigmoid(z) - r0) / (_sigmoid(9.0 * z) - r0)


def make_sigmoid_shape(time_grid, plateau_param: float = 0.999) -> np.ndarray:
    """Symmetric envelope vanishing at both ends with height ``plateau_param`` at ``0.1 T``.

    A logistic ramp centred at ``0.05 T`` is mirrored (pointwise minimum with
    its time reverse), shifted so that it starts at zero and scaled to a peak
    of one.
    """
    if not 0.0 < plateau_param < 1.0:
        raise InvalidArgument("plateau_param must lie in (0, 1)")
    ts = _times(time_grid)
    if ts.size < 3:
        raise InvalidArgument("a shape function needs at least three time points")
    T = ts[-1] - ts[0]
    z = brentq(lambda z: _plateau_value(z) - plateau_param, 1e-8, 200.0, xtol=1e-14)
    a = z / (RAMP_CENTER * T)
    r = _sigmoid(a * ((ts - ts[0]) - RAMP_CENTER * T))
    s = np.minimum(r, r[::-1])
    s = s - s[0]
    s = s / s.max()
    s[0] = s[-1] = 0.0
    return s


@dataclass
class GroupBasis:
    """Columns ``S(t) f_m(t)`` sampled on a time grid.

    ``functions`` has shape ``(n_steps, M)``; ``theta`` records the random
    frequency offsets.
    """

    functions: np.ndarray
    theta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    shape: np.ndarray | None = None

    def __post_init__(self):
        f = np.asarray(self.functions, dtype=float)
        if f.ndim == 1:
            f = f[:, None]
        if f.ndim != 2 or f.shape[1] < 1:
            raise InvalidArgument("basis functions must form an (n_steps, M) array")
        if np.any(f[0] != 0.0) or np.any(f[-1] != 0.0):
            raise InvalidArgument("basis functions must vanish at both ends")
        self.functions = f

    @property
    def M(self) -> int:
        return self.functions.shape[1]

    @property
    def n_steps(self) -> int:
        return self.functions.shape[0]

    def expand(self, coefficients: np.ndarray) -> np.ndarray:
        """``sum_m c_m S f_m`` per field, shape ``(n_steps, n_fields)``."""
        return self.functions @ np.asarray(coefficients, dtype=float).reshape(self.M, -1)


def make_sine_basis(M: int, time_grid, max_rand: float = 0.0, rng_seed=None, shape=None) -> GroupBasis:
    """``S(t) sin((m + theta_m) pi t / T)`` for ``m = 1..M`` with ``theta_m ~ U(-max_rand, max_rand)``.

    Without ``shape`` the columns are plain sines; ``rng_seed`` may be an int
    or a :class:`numpy.random.Generator`.
    """
    if int(M) != M or M < 1:
        raise InvalidArgument("M must be a positive integer")
    if not 0.0 <= max_rand <= 0.5:
        raise InvalidArgument("max_rand must lie in [0, 0.5]")
    ts = _times(time_grid)
    T = ts[-1] - ts[0]
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    theta = rng.uniform(-max_rand, max_rand, size=int(M)) if max_rand > 0 else np.zeros(int(M))
    m = np.arange(1, int(M) + 1) + theta
    f = np.sin(np.pi * np.outer(ts - ts[0], m) / T)
    if shape is not None:
        f = f * np.asarray(shape, dtype=float)[:, None]
    f[0] = 0.0
    f[-1] = 0.0
    return GroupBasis(f, theta, None if shape is None else np.asarray(shape, dtype=float))


class BasisMaker:
    """Draws fresh randomized sine bases from a seeded generator."""

    def __init__(self, M: int, time_grid, max_rand: float = 0.0, seed=None, shape=None):
        self.M = int(M)
        self.time_grid = time_grid
        self.max_rand = float(max_rand)
        self.shape = shape
        self.rng = np.random.default_rng(seed)

    def __call__(self) -> GroupBasis:
        return make_sine_basis(self.M, self.time_grid, self.max_rand, self.rng, self.shape)


def make_basis_maker(M: int, time_grid, max_rand: float = 0.0, seed=None, shape=None) -> BasisMaker:
    return BasisMaker(M, time_grid, max_rand, seed, shape)


class GroupProblem:
    """Optimization target in coefficient space: ``u(t) = u0(t) + sum_m c_m S f_m``.

    ``x`` holds the coefficients with shape ``(M, n_fields)``.  The reference
    ``u0`` defaults to the problem's current control.
    """

    def __init__(self, problem, basis: GroupBasis, u0=None, coefficients=None):
        if basis.n_steps != problem.n_steps:
            raise InvalidArgument("basis and problem use different time grids")
        self.problem = problem
        self.basis = basis
        self.u0 = problem.values if u0 is None else np.reshape(np.asarray(u0, dtype=float), problem.values.shape)
        c = np.zeros((basis.M, problem.n_fields)) if coefficients is None else coefficients
        self.x = np.array(c, dtype=float).reshape(basis.M, problem.n_fields)
        self.problem.update(self.control_values(self.x))

    def control_values(self, c) -> np.ndarray:
        return self.u0 + self.basis.expand(c)

    def set(self, c) -> None:
        self.x = np.array(c, dtype=float).reshape(self.x.shape)
        self.problem.update(self.control_values(self.x))

    def cost_at(self, c) -> float:
        return self.problem.cost_at(self.control_values(c))

    def fidelity_at(self, c) -> float:
        return self.problem.fidelity_at(self.control_values(c))

    def gradient_at(self, c) -> np.ndarray:
        return self.project(self.problem.gradient_at(self.control_values(c)))

    def project(self, gradient_l2: np.ndarray) -> np.ndarray:
        """``dJ/dc_m = sum_i g(t_i) S f_m(t_i) dt``."""
        return self.basis.functions.T @ gradient_l2 * self.problem.dt

    @staticmethod
    def inner(a, b) -> float:
        return float(np.sum(a * b))

    def absorb(self, basis: GroupBasis) -> None:
        """Fold the current control into ``u0`` and continue from ``c = 0`` in ``basis``."""
        if basis.n_steps != self.problem.n_steps:
            raise InvalidArgument("basis and problem use different time grids")
        self.u0 = self.control_values(self.x)
        self.basis = basis
        self.x = np.zeros((basis.M, self.problem.n_fields))
        self.problem.update(self.u0)


def group_gradient(problem, basis: GroupBasis) -> np.ndarray:
    """Coefficient gradient of ``problem`` at its current control."""
    if basis.n_steps != problem.n_steps:
        raise InvalidArgument("basis and problem use different time grids")
    return basis.functions.T @ problem.gradient() * problem.dt
