"""GRAPE, GROUP and dressed GROUP optimizers."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..errors import InvalidArgument, LineSearchFailure
from .basis import GroupBasis, GroupProblem
from .lbfgs import DEFAULT_MEMORY, LbfgsMemory
from .linesearch import InterpolatingStepSizeFinder
from .monitor import Collector, default_restarter, default_stopper
from .problem import gradient_h1

STATUS_OK = "ok"
STATUS_LINE_SEARCH = "line-search-failure"
STATUS_COLLECTOR = "collector-failure"


class GrapeTarget:
    """Optimization over the sampled control itself, in the L2 or H1 metric."""

    def __init__(self, problem, metric: str = "L2"):
        if metric not in ("L2", "H1"):
            raise InvalidArgument(f"unknown metric {metric!r}")
        self.problem = problem
        self.metric = metric
        self.dt = problem.dt
        self.x = problem.values

    def set(self, x) -> None:
        self.x = np.array(x, dtype=float)
        self.problem.update(self.x)

    def cost_at(self, x) -> float:
        return self.problem.cost_at(x)

    def gradient_at(self, x) -> np.ndarray:
        g = self.problem.gradient_at(x)
        return g if self.metric == "L2" else gradient_h1(g, self.dt)

    def inner(self, a, b) -> float:
        if self.metric == "L2":
            return float(np.sum(a * b)) * self.dt
        return float(np.sum(np.diff(a, axis=0) * np.diff(b, axis=0))) / self.dt


@dataclass
class OptimizationResult:
    problem: object
    status: str
    message: str
    iterations: int
    fidelity_history: list = field(default_factory=list)
    cost_history: list = field(default_factory=list)
    step_history: list = field(default_factory=list)
    superiterations: int = 0
    error: Optional[BaseException] = None

    @property
    def fidelity(self) -> float:
        return self.fidelity_history[-1]

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK


class Optimizer:
    """Line-search descent on a target (steepest descent or L-BFGS).

    Attributes read by stoppers and collectors: ``iteration``, ``fidelity``,
    ``cost``, ``step_size``, ``gradient``, ``n_propagation_steps``, ``fpp``
    and ``problem``.
    """

    def __init__(self, target, direction: str = "lbfgs", stopper=None, collector=None,
                 step_size_finder=None, memory: int = DEFAULT_MEMORY):
        if direction not in ("lbfgs", "steepest"):
            raise InvalidArgument(f"unknown direction rule {direction!r}")
        self.target = target
        self.direction_rule = direction
        self.stopper = stopper or default_stopper()
        self.collector = collector or Collector()
        self.step_size_finder = step_size_finder or InterpolatingStepSizeFinder()
        self.lbfgs = LbfgsMemory(memory, target.inner)
        self.iteration = 0
        self.step_size: Optional[float] = None
        self.superiteration = 0
        self.fidelity_history: list = []
        self.cost_history: list = []
        self.step_history: list = []
        self._last_count = self.problem.n_propagation_steps
        self.fpp = 0.0
        self._refresh()

    @property
    def problem(self):
        return self.target.problem

    @property
    def n_propagation_steps(self) -> int:
        return self.problem.n_propagation_steps

    def _refresh(self) -> None:
        x = self.target.x
        self.cost = self.target.cost_at(x)
        self.fidelity = self.target.problem.fidelity_at(self.target.problem.values)
        self.gradient = self.target.gradient_at(x)

    def _direction(self) -> np.ndarray:
        if self.direction_rule == "steepest":
            return -self.gradient
        p = self.lbfgs.direction(self.gradient)
        if not self.target.inner(self.gradient, p) < 0:
            self.lbfgs.reset()
            p = -self.gradient
        return p

    def _record(self) -> None:
        count = self.n_propagation_steps
        self.fpp = (count - self._last_count) / max(self.problem.n_steps - 1, 1)
        self._last_count = count
        self.fidelity_history.append(self.fidelity)
        self.cost_history.append(self.cost)
        self.step_history.append(0.0 if self.step_size is None else self.step_size)
        self.collector(self)

    def step(self) -> None:
        """One accepted line-search iteration; raises :class:`LineSearchFailure`."""
        p = self._direction()
        alpha = self.step_size_finder(p, self.target, self)
        g_old = self.gradient
        x_new = self.target.x + alpha * p
        self.target.set(x_new)
        self._refresh()
        if self.direction_rule == "lbfgs":
            self.lbfgs.push(alpha * p, self.gradient - g_old)
        self.step_size = alpha
        self.iteration += 1

    def _restart(self) -> bool:
        return False

    def _result(self, status, message, error=None) -> OptimizationResult:
        return OptimizationResult(self.problem, status, message, self.iteration, list(self.fidelity_history),
                                  list(self.cost_history), list(self.step_history), self.superiteration, error)

    def run(self) -> OptimizationResult:
        try:
            self._record()
        except Exception as exc:
            return self._result(STATUS_COLLECTOR, f"collector raised {exc!r}", exc)
        while True:
            message = self._stop_reason()
            if message is not None:
                return self._result(STATUS_OK, message)
            try:
                self.step()
            except LineSearchFailure as exc:
                if self._restart():
                    continue
                return self._result(STATUS_LINE_SEARCH, str(exc), exc)
            try:
                self._record()
            except Exception as exc:
                return self._result(STATUS_COLLECTOR, f"collector raised {exc!r}", exc)

    def _stop_reason(self) -> Optional[str]:
        return self.stopper.reason(self) if hasattr(self.stopper, "reason") else (
            "stopper fired" if self.stopper(self) else None)


class DressedOptimizer(Optimizer):
    """GROUP with superiterations: absorb the control, draw a new basis, reset L-BFGS."""

    MAX_FAILED_RESTARTS = 3

    def __init__(self, target: GroupProblem, basis_maker: Callable, restarter=None, **kwargs):
        super().__init__(target, **kwargs)
        self.basis_maker = basis_maker
        self.restarter = restarter or default_restarter()
        self._failed = 0

    def _restart(self) -> bool:
        """Begin a new superiteration; returns False after repeated fruitless restarts."""
        if self.superiteration_iterations == 0:
            self._failed += 1
            if self._failed > self.MAX_FAILED_RESTARTS:
                return False
        else:
            self._failed = 0
        self.target.absorb(self.basis_maker())
        self.lbfgs.reset()
        self.step_size = None
        self.superiteration += 1
        self._super_start = self.iteration
        self._refresh()
        return True

    @property
    def superiteration_iterations(self) -> int:
        return self.iteration - getattr(self, "_super_start", 0)

    def _stop_reason(self) -> Optional[str]:
        restart = self.iteration > 0 and self.restarter(self)
        exclude = ("step",) if restart else ()
        if hasattr(self.stopper, "reason"):
            message = self.stopper.reason(self, exclude)
        else:
            message = "stopper fired" if self.stopper(self) else None
        if message is None and restart and self.superiteration_iterations > 0:
            self._restart()
        return message


def _lbfgs_or_steepest(variant: str):
    v = variant.lower().replace("-", "_")
    method, _, metric = v.partition("_")
    if method in ("bfgs", "lbfgs"):
        method = "lbfgs"
    if method not in ("lbfgs", "steepest") or metric.upper() not in ("L2", "H1"):
        raise InvalidArgument(f"unknown GRAPE variant {variant!r}")
    return method, metric.upper()


def make_grape(problem, variant: str = "bfgs_L2", stopper=None, collector=None, step_size_finder=None,
               memory: int = DEFAULT_MEMORY) -> Optimizer:
    """``variant`` is one of ``steepest_L2``, ``steepest_H1``, ``bfgs_L2``, ``bfgs_H1``."""
    method, metric = _lbfgs_or_steepest(variant)
    return Optimizer(GrapeTarget(problem, metric), method, stopper, collector, step_size_finder, memory)


def grape_optimize(problem, variant: str = "bfgs_L2", stopper=None, collector=None,
                   step_size_finder=None) -> OptimizationResult:
    return make_grape(problem, variant, stopper, collector, step_size_finder).run()


def make_group(problem, basis: GroupBasis, stopper=None, collector=None, step_size_finder=None,
               coefficients=None, u0=None, direction: str = "lbfgs") -> Optimizer:
    return Optimizer(GroupProblem(problem, basis, u0, coefficients), direction, stopper, collector,
                     step_size_finder)


def group_optimize(problem, basis: GroupBasis, stopper=None, collector=None, step_size_finder=None,
                   coefficients=None, u0=None) -> OptimizationResult:
    return make_group(problem, basis, stopper, collector, step_size_finder, coefficients, u0).run()


def make_dgroup(problem, basis_maker: Callable, stopper=None, collector=None, step_size_finder=None,
                restarter=None, coefficients=None, u0=None) -> DressedOptimizer:
    target = GroupProblem(problem, basis_maker(), u0, coefficients)
    return DressedOptimizer(target, basis_maker, restarter, stopper=stopper, collector=collector,
                            step_size_finder=step_size_finder)


def dgroup_optimize(problem, basis_maker: Callable, stopper=None, collector=None, step_size_finder=None,
                    restarter=None, coefficients=None, u0=None) -> OptimizationResult:
    return make_dgroup(problem, basis_maker, stopper, collector, step_size_finder, restarter,
                       coefficients, u0).run()
