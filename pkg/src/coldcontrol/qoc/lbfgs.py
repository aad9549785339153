"""Limited-memory BFGS directions with a pluggable inner product."""
from __future__ import annotations

from collections import deque
from typing import Callable, Optional

import numpy as np

DEFAULT_MEMORY = 10
CURVATURE_EPS = 1e-12


def euclidean(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.sum(a * b))


class LbfgsMemory:
    """Curvature-pair history and the two-loop recursion.

    ``inner`` must be the inner product in which ``gradient`` is the Riesz
    representative of the derivative (e.g. a ``dt``-weighted sum for L2).
    """

    def __init__(self, memory: int = DEFAULT_MEMORY, inner: Optional[Callable] = None):
        if memory < 1:
            raise ValueError("memory must be at least 1")
        self.memory = int(memory)
        self.inner = inner or euclidean
        self.pairs: deque = deque(maxlen=self.memory)
        self.n_skipped = 0

    def __len__(self):
        return len(self.pairs)

    def reset(self) -> None:
        self.pairs.clear()

    def push(self, s: np.ndarray, y: np.ndarray) -> bool:
        """Store ``(s, y)`` when ``<s, y> > 1e-12``; returns whether it was kept."""
        sy = self.inner(s, y)
        if not sy > CURVATURE_EPS:
            self.n_skipped += 1
            return False
        self.pairs.append((s.copy(), y.copy(), 1.0 / sy))
        return True

    def direction(self, gradient: np.ndarray) -> np.ndarray:
        q = np.array(gradient, dtype=float, copy=True)
        if not self.pairs:
            return -q
        alphas = []
        for s, y, rho in reversed(self.pairs):
            a = rho * self.inner(s, q)
            q -= a * y
            alphas.append(a)
        s, y, _ = self.pairs[-1]
        q *= self.inner(s, y) / self.inner(y, y)
        for (s, y, rho), a in zip(self.pairs, reversed(alphas)):
            b = rho * self.inner(y, q)
            q += (a - b) * s
        return -q


def lbfgs_direction(state: LbfgsMemory, gradient: np.ndarray) -> np.ndarray:
    return state.direction(gradient)
