"""Stopping criteria and per-iteration collectors."""
from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import Callable, Optional

DEFAULT_FIDELITY = 0.999
DEFAULT_MIN_STEP = 1e-7
DEFAULT_MAX_ITERATIONS = 2000
DEFAULT_RESTART_STEP = 1e-6


@dataclass(frozen=True)
class Criterion:
    """Named stop predicate; ``kind`` lets dressed optimizers tell step-size stops apart."""

    message: str
    test: Callable
    kind: str = "custom"

    def __call__(self, opt) -> bool:
        return bool(self.test(opt))


def fidelity_above(threshold: float = DEFAULT_FIDELITY) -> Criterion:
    return Criterion("fidelity criterion satisfied", lambda o: o.fidelity > threshold, "fidelity")


def step_below(threshold: float = DEFAULT_MIN_STEP) -> Criterion:
    return Criterion("Step size too small",
                     lambda o: o.step_size is not None and o.step_size < threshold, "step")


def max_iterations(limit: int = DEFAULT_MAX_ITERATIONS) -> Criterion:
    return Criterion("Max iterations exceeded", lambda o: o.iteration >= limit, "iterations")


class Stopper:
    def __init__(self, criteria):
        self.criteria = [c if isinstance(c, Criterion) else Criterion("custom criterion", c) for c in criteria]

    def reason(self, opt, exclude=()) -> Optional[str]:
        """Message of the first satisfied criterion, ignoring kinds in ``exclude``."""
        for c in self.criteria:
            if c.kind not in exclude and c(opt):
                return c.message
        return None

    def __call__(self, opt) -> bool:
        return self.reason(opt) is not None


def make_stopper(*predicates) -> Stopper:
    """Stop when any predicate holds; accepts :class:`Criterion` objects or plain callables."""
    if len(predicates) == 1 and not callable(predicates[0]):
        predicates = tuple(predicates[0])
    return Stopper(predicates)


def default_stopper(fidelity: float = DEFAULT_FIDELITY, min_step: float = DEFAULT_MIN_STEP,
                    max_iter: int = DEFAULT_MAX_ITERATIONS) -> Stopper:
    return Stopper([fidelity_above(fidelity), step_below(min_step), max_iterations(max_iter)])


def default_restarter(tol: float = DEFAULT_RESTART_STEP) -> Callable:
    """Start a new superiteration once the accepted step drops below ``tol``."""
    return lambda opt: opt.step_size is not None and opt.step_size < tol


class Collector:
    """Calls ``callback(optimizer)`` after every iteration."""

    def __init__(self, callback: Optional[Callable] = None):
        self.callback = callback

    def __call__(self, opt) -> None:
        if self.callback is not None:
            self.callback(opt)


def make_collector(callback: Optional[Callable] = None) -> Collector:
    return Collector(callback)


def format_iteration(opt) -> str:
    step = 0.0 if opt.step_size is None else opt.step_size
    return f"ITER {opt.iteration} | fidelity : {opt.fidelity:.10g}\t stepsize : {step:.6g}\t fpp : {opt.fpp:.6g}"


def printing_collector(stream=None) -> Collector:
    def show(opt):
        print(format_iteration(opt), file=stream or sys.stdout, flush=True)
    return Collector(show)
