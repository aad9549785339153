"""Backtracking line search with quadratic/cubic interpolation."""
from __future__ import annotations

import math

import numpy as np

from ..errors import LineSearchFailure

ARMIJO_C1 = 1e-4
MAX_TRIALS = 30
MAX_EXTRAPOLATION = 10.0
INTERPOLATION_SLACK = 0.25


def _quadratic_min(phi0, d0, a, fa):
    curv = fa - phi0 - d0 * a
    if curv <= 0:
        return math.inf
    return -d0 * a * a / (2.0 * curv)


def _cubic_min(phi0, d0, a0, f0, a1, f1):
    """Minimizer of the cubic through ``phi(0), phi'(0), phi(a0), phi(a1)``."""
    r1 = f1 - phi0 - d0 * a1
    r0 = f0 - phi0 - d0 * a0
    den = a0 * a0 * a1 * a1 * (a1 - a0)
    if den == 0:
        return math.nan
    a = (a0 * a0 * r1 - a1 * a1 * r0) / den
    b = (-a0**3 * r1 + a1**3 * r0) / den
    if a == 0:
        return -d0 / (2 * b) if b != 0 else math.nan
    disc = b * b - 3 * a * d0
    if disc < 0:
        return math.nan
    return (-b + math.sqrt(disc)) / (3 * a)


def line_search(phi, phi0: float, d0: float, alpha0: float, max_step: float,
                c1: float = ARMIJO_C1, max_trials: int = MAX_TRIALS) -> tuple[float, float, int]:
    """Return ``(alpha, phi(alpha), n_evaluations)`` satisfying the Armijo condition.

    ``phi(alpha)`` is the cost along the search direction and ``d0 < 0`` its
    slope at zero.  When the first trial already passes but the quadratic
    model puts the minimizer more than 25% away from it, the model minimizer
    (clamped to ``[alpha/10, min(10 alpha, max_step)]``) is tried once and
    kept if it is lower.
    """
    if not d0 < 0:
        raise LineSearchFailure("search direction is not a descent direction")
    alpha = min(alpha0, max_step)
    if not alpha > 0:
        raise LineSearchFailure("initial step size must be positive")
    prev = None
    for trial in range(1, max_trials + 1):
        fa = phi(alpha)
        if np.isfinite(fa) and fa <= phi0 + c1 * alpha * d0:
            if trial == 1 and trial < max_trials:
                target = min(max(_quadratic_min(phi0, d0, alpha, fa), 0.1 * alpha),
                             MAX_EXTRAPOLATION * alpha, max_step)
                if abs(target - alpha) > INTERPOLATION_SLACK * alpha:
                    fe = phi(target)
                    if np.isfinite(fe) and fe < fa and fe <= phi0 + c1 * target * d0:
                        return target, fe, trial + 1
                    return alpha, fa, trial + 1
            return alpha, fa, trial
        if not np.isfinite(fa):
            new = 0.1 * alpha
        elif prev is None:
            new = _quadratic_min(phi0, d0, alpha, fa)
        else:
            new = _cubic_min(phi0, d0, alpha, fa, prev[0], prev[1])
            if not np.isfinite(new):
                new = _quadratic_min(phi0, d0, alpha, fa)
        # safeguard: stay within [alpha/10, alpha/2]
        if not np.isfinite(new):
            new = 0.5 * alpha
        new = min(max(new, 0.1 * alpha), 0.5 * alpha)
        if np.isfinite(fa):
            prev = (alpha, fa)
        alpha = new
    raise LineSearchFailure(f"no admissible step after {max_trials} trials")


class InterpolatingStepSizeFinder:
    """Armijo backtracking started at ``min(max_init_guess, 2 * previous step)``."""

    def __init__(self, max_step: float = 5.0, max_init_guess: float = 1.0):
        if max_step <= 0 or max_init_guess <= 0:
            raise ValueError("step bounds must be positive")
        self.max_step = float(max_step)
        self.max_init_guess = float(max_init_guess)

    def initial_guess(self, previous: float | None) -> float:
        if previous is None or not previous > 0:
            return min(self.max_init_guess, self.max_step)
        return min(self.max_init_guess, 2.0 * previous, self.max_step)

    def __call__(self, direction, target, optimizer) -> float:
        x = target.x
        phi0 = optimizer.cost
        d0 = target.inner(optimizer.gradient, direction)
        alpha, _, _ = line_search(lambda a: target.cost_at(x + a * direction), phi0, d0,
                                  self.initial_guess(optimizer.step_size), self.max_step)
        return alpha


def make_interpolating_step_size_finder(max_step: float = 5.0, max_init_guess: float = 1.0):
    return InterpolatingStepSizeFinder(max_step, max_init_guess)


def interpolating_step_size(direction, problem, optimizer, max_step: float = 5.0,
                            max_init_guess: float = 1.0) -> float:
    return InterpolatingStepSizeFinder(max_step, max_init_guess)(direction, problem, optimizer)
