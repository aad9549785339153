"""State-transfer problems: cost, fidelity and gradients with respect to the control."""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from ..core import StateVector
from ..errors import InvalidArgument
from .control import ControlField
from .dynamics import make_dynamics


@dataclass(frozen=True)
class SoftBounds:
    """Parabolic penalty ``sigma/2 * int dist(u, [lower, upper])^2 dt``.

    ``lower``/``upper`` are scalars or one value per control field; ``None``
    leaves that side open.
    """

    sigma: float
    lower: Optional[object] = None
    upper: Optional[object] = None

    def excess(self, u: np.ndarray) -> np.ndarray:
        """Signed distance outside the admissible box (zero inside)."""
        out = np.zeros_like(u)
        if self.lower is not None:
            lo = np.broadcast_to(np.asarray(self.lower, dtype=float), u.shape[1:])
            out = np.where(u < lo, u - lo, out)
        if self.upper is not None:
            hi = np.broadcast_to(np.asarray(self.upper, dtype=float), u.shape[1:])
            out = np.where(u > hi, u - hi, out)
        return out

    def cost(self, u: np.ndarray, dt: float) -> float:
        return 0.5 * self.sigma * float(np.sum(self.excess(u) ** 2)) * dt

    def gradient(self, u: np.ndarray) -> np.ndarray:
        return self.sigma * self.excess(u)


def regularization_cost(u: np.ndarray, dt: float, gamma: float) -> float:
    """``gamma/2 * int du/dt^2 dt`` with forward differences."""
    if gamma == 0.0:
        return 0.0
    du = np.diff(u, axis=0) / dt
    return 0.5 * gamma * float(np.sum(du**2)) * dt


def regularization_gradient(u: np.ndarray, dt: float, gamma: float) -> np.ndarray:
    """``-gamma * u''`` (central second difference) at interior points, 0 at the ends."""
    g = np.zeros_like(u)
    if gamma != 0.0:
        g[1:-1] = -gamma * (u[2:] - 2 * u[1:-1] + u[:-2]) / dt**2
    return g


def gradient_h1(gradient_l2: np.ndarray, dt: float) -> np.ndarray:
    """Solve ``-D2 g = gradient_l2`` on interior points with ``g = 0`` at both ends."""
    f = np.asarray(gradient_l2, dtype=float)
    squeeze = f.ndim == 1
    if squeeze:
        f = f[:, None]
    n = f.shape[0]
    out = np.zeros_like(f)
    m = n - 2
    if m > 0:
        ab = np.empty((3, m))
        ab[0, :] = -1.0
        ab[1, :] = 2.0
        ab[2, :] = -1.0
        out[1:-1] = scipy.linalg.solve_banded((1, 1), ab, f[1:-1] * dt**2)
    return out[:, 0] if squeeze else out


def neg_second_difference(g: np.ndarray, dt: float) -> np.ndarray:
    """Interior values of ``-D2 g``."""
    return -(g[2:] - 2 * g[1:-1] + g[:-2]) / dt**2


@dataclass
class _Evaluation:
    traj: np.ndarray
    overlap: complex
    cost: float
    prepared: object = None
    grad: Optional[np.ndarray] = None
    lams: Optional[np.ndarray] = None


class StateTransferProblem:
    """Drive ``psi0`` into ``psit`` over the duration of ``control``.

    The cost is ``(1 - F)/2 + J_gamma + J_bounds``; ``gradient()`` returns the
    L2 gradient per time step and field, with both endpoints set to zero so
    that the initial and final control values never move.
    """

    _CACHE_SIZE = 4

    def __init__(self, hamiltonian, psi0: StateVector, psit: StateVector, control: ControlField,
                 dHdu=None, gamma: float = 0.0, bounds: Optional[SoftBounds] = None, krylov_order: int = 4):
        if psi0.basis != psit.basis or psi0.amplitudes.shape != psit.amplitudes.shape:
            raise InvalidArgument("initial and target states live in different bases")
        for name, s in (("initial", psi0), ("target", psit)):
            if abs(s.norm() - 1.0) > 1e-8:
                raise InvalidArgument(f"{name} state is not normalized (norm {s.norm():.12f})")
        if gamma < 0:
            raise InvalidArgument("gamma must be non-negative")
        n_fields = getattr(hamiltonian, "n_fields", 1)
        if control.n_fields != n_fields:
            raise InvalidArgument(f"hamiltonian expects {n_fields} control fields, got {control.n_fields}")
        self.hamiltonian = hamiltonian
        self.psi0 = psi0
        self.psit = psit
        self.gamma = float(gamma)
        self.bounds = bounds
        self.krylov_order = krylov_order
        self.dHdu = dHdu
        self.dt = control.dt
        self.dynamics = make_dynamics(hamiltonian, control.dt, dHdu, krylov_order)
        self._u = control.values.copy()
        self._cache: OrderedDict = OrderedDict()
        self.n_propagation_steps = 0

    # -- control -------------------------------------------------------------------------

    @property
    def n_steps(self) -> int:
        return self._u.shape[0]

    @property
    def n_fields(self) -> int:
        return self._u.shape[1]

    @property
    def weight(self) -> float:
        return self.dynamics.weight

    def control(self) -> ControlField:
        return ControlField(self._u.copy(), self.dt)

    @property
    def values(self) -> np.ndarray:
        return self._u.copy()

    def update(self, u) -> None:
        values = u.values if isinstance(u, ControlField) else np.asarray(u, dtype=float)
        values = np.reshape(values, self._u.shape)
        if not np.all(np.isfinite(values)):
            raise InvalidArgument("control values must be finite")
        self._u = values.copy()

    def copy(self) -> "StateTransferProblem":
        return StateTransferProblem(self.hamiltonian, self.psi0, self.psit, self.control(), self.dHdu,
                                    self.gamma, self.bounds, self.krylov_order)

    # -- evaluation ----------------------------------------------------------------------

    def _evaluate(self, u: np.ndarray) -> _Evaluation:
        key = u.tobytes()
        hit = self._cache.get(key)
        if hit is not None:
            self._cache.move_to_end(key)
            return hit
        dyn = self.dynamics
        prepared = dyn.prepare(u) if hasattr(dyn, "prepare") else None
        traj = dyn.forward(self.psi0.amplitudes, u, prepared)
        self.n_propagation_steps += u.shape[0] - 1
        ov = complex(np.vdot(self.psit.amplitudes, traj[-1]) * dyn.weight)
        cost = 0.5 * (1.0 - abs(ov) ** 2) + regularization_cost(u, self.dt, self.gamma)
        if self.bounds is not None:
            cost += self.bounds.cost(u, self.dt)
        ev = _Evaluation(traj, ov, cost, prepared)
        self._cache[key] = ev
        if len(self._cache) > self._CACHE_SIZE:
            self._cache.popitem(last=False)
        return ev

    def _with_gradient(self, u: np.ndarray, keep: bool = False) -> _Evaluation:
        ev = self._evaluate(u)
        if ev.grad is None or (keep and ev.lams is None):
            dyn = self.dynamics
            lam_T = -ev.overlap * dyn.weight * self.psit.amplitudes
            dJ, lams = dyn.backward(ev.traj, u, lam_T, ev.prepared, keep=keep)
            self.n_propagation_steps += u.shape[0] - 1
            g = dJ / self.dt + regularization_gradient(u, self.dt, self.gamma)
            if self.bounds is not None:
                g = g + self.bounds.gradient(u)
            g[0] = 0.0
            g[-1] = 0.0
            ev.grad = g
            if keep:
                ev.lams = lams
        return ev

    def cost(self) -> float:
        return self._evaluate(self._u).cost

    def cost_at(self, u) -> float:
        return self._evaluate(np.reshape(np.asarray(u, dtype=float), self._u.shape)).cost

    def overlap(self) -> complex:
        return self._evaluate(self._u).overlap

    def fidelity(self) -> float:
        return abs(self.overlap()) ** 2

    def fidelity_at(self, u) -> float:
        return abs(self._evaluate(np.reshape(np.asarray(u, dtype=float), self._u.shape)).overlap) ** 2

    def gradient(self) -> np.ndarray:
        """L2 gradient, shape ``(n_steps, n_fields)``."""
        return self._with_gradient(self._u).grad.copy()

    def gradient_at(self, u) -> np.ndarray:
        return self._with_gradient(np.reshape(np.asarray(u, dtype=float), self._u.shape)).grad.copy()

    def gradient_h1(self) -> np.ndarray:
        return gradient_h1(self.gradient(), self.dt)

    def trajectory(self) -> np.ndarray:
        return self._evaluate(self._u).traj

    def states(self) -> list[StateVector]:
        return [self.psi0.with_amplitudes(a) for a in self.trajectory()]

    def final_state(self) -> StateVector:
        return self.psi0.with_amplitudes(self.trajectory()[-1])

    def costate_trajectory(self) -> np.ndarray:
        """``chi(t_i)`` for every time step, with ``chi(T) = i <psit|psi(T)> psit``."""
        ev = self._with_gradient(self._u, keep=True)
        return -1j * ev.lams / self.dynamics.weight

    def hold(self, n_steps: int) -> np.ndarray:
        """Continue from ``psi(T)`` with the final control held for ``n_steps`` steps."""
        return self.dynamics.hold(self.trajectory()[-1], self._u[-1], n_steps)[1:]


def make_state_transfer_problem(hamiltonian, psi0, psit, control, dHdu=None, gamma=0.0, bounds=None,
                                krylov_order=4) -> StateTransferProblem:
    return StateTransferProblem(hamiltonian, psi0, psit, control, dHdu, gamma, bounds, krylov_order)


def propagate_forward(problem: StateTransferProblem) -> list[StateVector]:
    return problem.states()


def propagate_adjoint(problem: StateTransferProblem) -> list[StateVector]:
    chi = problem.costate_trajectory()
    return [problem.psi0.with_amplitudes(c) for c in chi]


def gradient_l2(problem: StateTransferProblem) -> np.ndarray:
    """L2 gradient of ``problem`` at its current control."""
    return problem.gradient()
