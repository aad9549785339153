"""Registry of example scenarios and the runner that executes them.

Every scenario builds a state-transfer problem from a flat dictionary of
parameters, simulates the initial guess, optionally optimizes it with any
of GRAPE, GROUP and dressed GROUP, and collects the results in a
:class:`~coldcontrol.container.DataContainer`.
"""
from __future__ import annotations

import copy
import sys
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .container import DataContainer
from .core import make_spatial_grid, n_steps_for
from .errors import DomainError
from .gpe import GpeHamiltonian, PotentialFunction, anharmonic_potential_function, first_excited_state, ground_state
from .lattice import (BoundTransform, LatticeHamiltonian, landau_zener_hamiltonian, make_fock_basis,
                      site_densities)
from .pair import TensorGrid2D, TwoParticleHamiltonian, first_excited_state_2d, ground_state_2d
from .qoc.basis import BasisMaker, make_sigmoid_shape, make_sine_basis
from .qoc.control import ControlField
from .qoc.linesearch import InterpolatingStepSizeFinder
from .qoc.monitor import default_restarter, default_stopper, format_iteration, make_collector
from .qoc.optimizers import make_dgroup, make_grape, make_group
from .qoc.problem import SoftBounds, StateTransferProblem

ALGORITHMS = ("grape", "group", "dgroup")

# shared by every scenario
COMMON = {
    "dt": 0.002,
    "duration": 1.25,
    "optimize": True,
    "algorithms": ["grape", "group", "dgroup"],
    "grape_variant": "bfgs_L2",
    "fidelity_target": 0.999,
    "min_step": 1e-7,
    "max_iterations": 2000,
    "max_step": 5.0,
    "max_init_guess": 1.0,
    "basis_size": 60,
    "plateau": 0.999,
    "max_rand": 0.1,
    "restart_step": 1e-6,
    "gamma": 0.0,
    "stride": 5,
    "hold_steps": None,
    "verbose": True,
    "seed": 0,
}

TRAP = {"x_min": -2.0, "x_max": 2.0, "kin_factor": 0.36537, "p2": 65.8392, "p4": 97.6349, "p6": -15.3850}

SCENARIO_DEFAULTS = {
    "gpe-shakeup": {
        **COMMON, **TRAP,
        "n_points": 256, "beta": 1.8299, "amplitude": 0.55, "gamma": 1e-5,
        "sigma": 2e3, "u_min": -1.0, "u_max": 1.0,
    },
    "bosehubbard-mott": {
        **COMMON,
        "n_sites": 5, "n_particles": 5, "J": 1.0, "U_min": 2.0, "U_max": 40.0, "U_initial": 4.0,
        "U_target": 30.0, "duration": 2.2, "krylov_order": 4, "trap_strength": 0.1, "max_rand": 0.0,
        "group_from_ramp": True,
    },
    "twoparticle-gate": {
        **COMMON, **TRAP,
        "n_points": 48, "g": 1.0, "amplitude": 0.55, "duration": 2.5, "dt": 0.004, "algorithms": ["grape"],
        "max_iterations": 100,
        "stride": 25, "sigma": 2e3, "u_min": -1.0, "u_max": 1.0,
    },
    "oneparticle-tweezer": {
        **COMMON,
        "x_min": -3.0, "x_max": 3.0, "n_points": 128, "kin_factor": 0.36537, "depth": 60.0, "waist": 0.6,
        "amplitude": 0.3, "duration": 1.0, "algorithms": ["grape"], "max_iterations": 300,
    },
    "twolevel-landau-zener": {
        **COMMON,
        "delta": 1.0, "u_start": -5.0, "u_end": 5.0, "duration": 1.5, "dt": 0.01,
        "algorithms": ["grape"], "max_iterations": 200, "basis_size": 10,
    },
}

DESCRIPTIONS = {
    "gpe-shakeup": "shake a condensate from the ground to the first excited state of an anharmonic trap",
    "bosehubbard-mott": "ramp a Bose-Hubbard chain from the superfluid into the Mott insulator",
    "twoparticle-gate": "excite two colliding atoms in a shaken anharmonic trap",
    "oneparticle-tweezer": "move a single atom in a Gaussian tweezer into its first excited state",
    "twolevel-landau-zener": "fast Landau-Zener sweep between adiabatic ground states",
}

NULLABLE = {"hold_steps"}


@dataclass
class Setup:
    """Everything a run needs besides the configuration."""

    problem: StateTransferProblem
    guess: ControlField
    grid_key: str
    grid_values: np.ndarray
    observable_key: str
    observable: Callable
    snapshot_key: Optional[str] = None
    snapshot: Optional[Callable] = None
    group_u0: Optional[np.ndarray] = None
    group_coefficients: Optional[np.ndarray] = None
    extra: dict = field(default_factory=dict)


def exponential_ramp(U_min: float, U_target: float, duration: float, time_grid, transform: BoundTransform):
    """``U(t) = U_min + 0.5 exp(ln((U_target - U_min)/0.5) t/T)`` mapped into control space."""
    ts = time_grid.times if hasattr(time_grid, "times") else np.asarray(time_grid, dtype=float)
    if not U_target > U_min + 0.5:
        raise DomainError("the ramp needs U_target > U_min + 0.5")
    U = U_min + 0.5 * np.exp(np.log((U_target - U_min) / 0.5) * ts / duration)
    if np.any(U <= transform.U_min) or np.any(U >= transform.U_max):
        raise DomainError("ramp leaves the open interval of the bound transform")
    dt = ts[1] - ts[0]
    return ControlField(transform.inverse(U), dt)


def _time_grid(cfg):
    n = n_steps_for(cfg["duration"], cfg["dt"])
    return n, np.arange(n) * cfg["dt"]


def _sine_guess(cfg):
    n, ts = _time_grid(cfg)
    u = cfg["amplitude"] * np.sin(np.pi * ts / ts[-1])
    u[0] = u[-1] = 0.0  # sin(pi) is not exactly zero in floating point
    return ControlField(u, cfg["dt"]), ts


def _bounds(cfg):
    return SoftBounds(cfg["sigma"], cfg["u_min"], cfg["u_max"]) if cfg.get("sigma", 0) > 0 else None


def _position(grid):
    def mean_x(psi):
        return float(np.sum(grid.x * np.abs(psi) ** 2) * grid.dx)
    return mean_x


def _group_from_zero(guess, cfg, n_steps):
    # the sine guess is the first basis function, so start from u0 = 0, c = [A, 0, ...]
    c = np.zeros((cfg["basis_size"], 1))
    c[0, 0] = cfg["amplitude"]
    return np.zeros((n_steps, 1)), c


def build_gpe(cfg) -> Setup:
    grid = make_spatial_grid(cfg["x_min"], cfg["x_max"], cfg["n_points"])
    pot = anharmonic_potential_function(grid, cfg["p2"], cfg["p4"], cfg["p6"])
    H = GpeHamiltonian(grid, cfg["kin_factor"], pot, cfg["beta"])
    psi0, psit = ground_state(H, 0.0), first_excited_state(H, 0.0)
    guess, ts = _sine_guess(cfg)
    problem = StateTransferProblem(H, psi0, psit, guess, gamma=cfg["gamma"], bounds=_bounds(cfg))
    u0, c = _group_from_zero(guess, cfg, len(ts))
    return Setup(problem, guess, "x", grid.x, "position", _position(grid), "potential", pot.values, u0, c)


def build_tweezer(cfg) -> Setup:
    grid = make_spatial_grid(cfg["x_min"], cfg["x_max"], cfg["n_points"])
    x, V0, w = grid.x, cfg["depth"], cfg["waist"]

    def V(u):
        return -V0 * np.exp(-2.0 * (x - u) ** 2 / w**2)

    def dV(u):
        return V(u) * 4.0 * (x - u) / w**2

    pot = PotentialFunction(V, 0.0, dV)
    H = GpeHamiltonian(grid, cfg["kin_factor"], pot, 0.0)
    psi0, psit = ground_state(H, 0.0), first_excited_state(H, 0.0)
    guess, ts = _sine_guess(cfg)
    problem = StateTransferProblem(H, psi0, psit, guess, gamma=cfg["gamma"])
    u0, c = _group_from_zero(guess, cfg, len(ts))
    return Setup(problem, guess, "x", grid.x, "position", _position(grid), "potential", pot.values, u0, c)


def build_two_particle(cfg) -> Setup:
    axis = make_spatial_grid(cfg["x_min"], cfg["x_max"], cfg["n_points"])
    pot = anharmonic_potential_function(axis, cfg["p2"], cfg["p4"], cfg["p6"])
    H = TwoParticleHamiltonian(TensorGrid2D(axis), cfg["kin_factor"], pot, cfg["g"])
    psi0, psit = ground_state_2d(H, 0.0), first_excited_state_2d(H, 0.0)
    guess, ts = _sine_guess(cfg)
    problem = StateTransferProblem(H, psi0, psit, guess, gamma=cfg["gamma"], bounds=_bounds(cfg))
    x = axis.x

    def mean_x(psi):
        rho = np.abs(psi) ** 2
        return float(0.5 * np.sum((x[:, None] + x[None, :]) * rho) * axis.dx**2)

    u0, c = _group_from_zero(guess, cfg, len(ts))
    return Setup(problem, guess, "x", x, "position", mean_x, "potential", pot.values, u0, c)


def build_bose_hubbard(cfg) -> Setup:
    L, N = cfg["n_sites"], cfg["n_particles"]
    basis = make_fock_basis(L, N)
    transform = BoundTransform(cfg["U_min"], cfg["U_max"])
    sites = np.linspace(-1, 1, L)
    H = LatticeHamiltonian(basis, transform, cfg["J"], cfg["trap_strength"] * sites**2)
    n, ts = _time_grid(cfg)
    guess = exponential_ramp(cfg["U_min"], cfg["U_target"], cfg["duration"], ts, transform)
    psi0 = H.ground_state(transform.inverse(cfg["U_initial"]))
    psit = H.ground_state(transform.inverse(cfg["U_target"]))
    problem = StateTransferProblem(H, psi0, psit, guess, gamma=cfg["gamma"], krylov_order=cfg["krylov_order"])

    def densities(psi):
        return site_densities(psi0.with_amplitudes(psi), basis)

    def interaction(u):
        return np.array([transform(float(np.atleast_1d(u)[0]))])

    u0 = guess.values if cfg["group_from_ramp"] else np.zeros_like(guess.values)
    return Setup(problem, guess, "sites", sites, "site_density", densities, "interaction", interaction,
                 u0, None, {"fock_dimension": basis.dimension})


def build_landau_zener(cfg) -> Setup:
    H = landau_zener_hamiltonian(cfg["delta"])
    n, ts = _time_grid(cfg)
    guess = ControlField(np.linspace(cfg["u_start"], cfg["u_end"], n), cfg["dt"])
    psi0, psit = H.eigenstate(cfg["u_start"]), H.eigenstate(cfg["u_end"])
    problem = StateTransferProblem(H, psi0, psit, guess, gamma=cfg["gamma"])
    return Setup(problem, guess, "levels", np.arange(2), "population", lambda psi: np.abs(psi) ** 2,
                 None, None, guess.values, None)


BUILDERS = {
    "gpe-shakeup": build_gpe,
    "bosehubbard-mott": build_bose_hubbard,
    "twoparticle-gate": build_two_particle,
    "oneparticle-tweezer": build_tweezer,
    "twolevel-landau-zener": build_landau_zener,
}


def scenario_ids() -> list[str]:
    return sorted(SCENARIO_DEFAULTS)


def scenario_defaults(scenario: str) -> dict:
    return copy.deepcopy(SCENARIO_DEFAULTS[scenario])


def _snapshot_indices(n_total: int, stride: int) -> np.ndarray:
    idx = np.arange(0, n_total, stride)
    if idx[-1] != n_total - 1:
        idx = np.append(idx, n_total - 1)
    return idx


def _record_trajectory(dc: DataContainer, prefix: str, setup: Setup, problem, cfg) -> None:
    """Propagate the current control plus the hold phase and store decimated diagnostics."""
    hold = cfg["hold_steps"]
    hold = (problem.n_steps // 2) if hold is None else hold
    traj = problem.trajectory()
    if hold > 0:
        traj = np.concatenate([traj, problem.hold(hold)])
    w = problem.weight
    target = problem.psit.amplitudes
    axes = tuple(range(1, traj.ndim))
    overlaps = np.tensordot(traj, np.conj(target), axes=(axes, tuple(range(target.ndim)))) * w
    u = problem.values
    u_full = np.concatenate([u, np.repeat(u[-1:], hold, axis=0)])
    idx = _snapshot_indices(traj.shape[0], max(1, cfg["stride"]))
    dc[f"{prefix}_fidelity_series"] = np.abs(overlaps) ** 2
    dc[f"{prefix}_{setup.observable_key}"] = np.array([setup.observable(traj[i]) for i in range(traj.shape[0])])
    dc[f"{prefix}_snapshot_indices"] = idx
    dc[f"{prefix}_states"] = traj[idx]
    if setup.snapshot is not None:
        dc[f"{prefix}_{setup.snapshot_key}"] = np.array([setup.snapshot(u_full[i]) for i in idx])
    dc[f"{prefix}_control"] = u
    dc[f"{prefix}_fidelity"] = problem.fidelity()


def make_optimizer(alg: str, problem, setup: Setup, cfg, collector=None):
    """Optimizer for ``alg`` configured from the scenario parameters."""
    stopper = default_stopper(cfg["fidelity_target"], cfg["min_step"], cfg["max_iterations"])
    finder = InterpolatingStepSizeFinder(cfg["max_step"], cfg["max_init_guess"])
    ts = problem.control().times
    if alg == "grape":
        return make_grape(problem, cfg["grape_variant"], stopper, collector, finder)
    shape = make_sigmoid_shape(ts, cfg["plateau"])
    M = cfg["basis_size"]
    coefficients = None
    if setup.group_coefficients is not None:
        coefficients = np.zeros((M, problem.n_fields))
        k = min(M, setup.group_coefficients.shape[0])
        coefficients[:k] = setup.group_coefficients[:k]
    if alg == "group":
        basis = make_sine_basis(M, ts, 0.0, shape=shape)
        return make_group(problem, basis, stopper, collector, finder, coefficients, setup.group_u0)
    maker = BasisMaker(M, ts, cfg["max_rand"], cfg["seed"], shape)
    return make_dgroup(problem, maker, stopper, collector, finder, default_restarter(cfg["restart_step"]),
                       coefficients, setup.group_u0)


def run_scenario(scenario: str, cfg: dict, stream=None) -> tuple[DataContainer, str]:
    """Execute ``scenario`` with the validated parameters ``cfg``.

    Returns the result container and an overall status: ``ok`` or the first
    failing optimizer status.
    """
    out = stream or sys.stdout
    verbose = cfg["verbose"]

    def say(text):
        if verbose:
            print(text, file=out, flush=True)

    setup = BUILDERS[scenario](cfg)
    problem = setup.problem
    dc = DataContainer()
    dc["scenario"] = scenario
    dc["config"] = dict(cfg)
    dc[setup.grid_key] = setup.grid_values
    dc["dt"] = problem.dt
    dc["duration"] = problem.control().duration
    dc["n_steps"] = problem.n_steps
    for k, v in setup.extra.items():
        dc[k] = v
    _record_trajectory(dc, "initial", setup, problem, cfg)
    say(f"initial fidelity : {problem.fidelity():.10g}")
    status = "ok"
    if cfg["optimize"]:
        for alg in cfg["algorithms"]:
            p = StateTransferProblem(problem.hamiltonian, problem.psi0, problem.psit, setup.guess, problem.dHdu,
                                     problem.gamma, problem.bounds, problem.krylov_order)
            collector = make_collector(lambda opt: say(format_iteration(opt)))
            say(f"== {alg}")
            result = make_optimizer(alg, p, setup, cfg, collector).run()
            say(f"{alg} stopped: {result.message}")
            dc[f"{alg}_fidelity_history"] = np.array(result.fidelity_history)
            dc[f"{alg}_cost_history"] = np.array(result.cost_history)
            dc[f"{alg}_step_history"] = np.array(result.step_history)
            dc[f"{alg}_status"] = result.status
            dc[f"{alg}_message"] = result.message
            dc[f"{alg}_iterations"] = result.iterations
            dc[f"{alg}_superiterations"] = result.superiterations
            dc[f"{alg}_propagation_steps"] = p.n_propagation_steps
            _record_trajectory(dc, alg, setup, p, cfg)
            say(f"FIDELITY {alg} {p.fidelity():.17g}")
            if result.status != "ok" and status == "ok":
                status = result.status
    return dc, status
