import numpy as np
import pytest

from coldcontrol.core import make_spatial_grid
from coldcontrol.gpe import GpeHamiltonian, anharmonic_potential_function

KAPPA = 0.36537
P2, P4, P6 = 65.8392, 97.6349, -15.3850
G1D = 1.8299


def small_trap(n=32, beta=G1D):
    grid = make_spatial_grid(-2.0, 2.0, n)
    pot = anharmonic_potential_function(grid, P2, P4, P6)
    return grid, GpeHamiltonian(grid, KAPPA, pot, beta)


def spectral_matrix(grid, kappa):
    """Dense matrix of the spectral kinetic operator, built column by column from the DFT."""
    n = grid.n
    k2 = grid.k**2
    eye = np.eye(n)
    return np.array([np.fft.ifft(kappa * k2 * np.fft.fft(e)) for e in eye]).T


def rk4(f, y, t0, t1, n):
    h = (t1 - t0) / n
    t = t0
    for _ in range(n):
        k1 = f(t, y)
        k2 = f(t + h / 2, y + h / 2 * k1)
        k3 = f(t + h / 2, y + h / 2 * k2)
        k4 = f(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    return y


def fd_relative_errors(problem, n_dirs=20, eps=1e-6, seed=0):
    """Relative mismatch of <grad, du> against central differences of the cost."""
    rng = np.random.default_rng(seed)
    u0 = problem.values
    g = problem.gradient()
    errs = []
    for _ in range(n_dirs):
        du = rng.normal(size=u0.shape)
        du[0] = du[-1] = 0.0
        fd = (problem.cost_at(u0 + eps * du) - problem.cost_at(u0 - eps * du)) / (2 * eps)
        an = float(np.sum(g * du)) * problem.dt
        errs.append(abs(fd - an) / abs(fd))
    return np.array(errs)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
