import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from coldcontrol.core import make_time_grid
from coldcontrol.errors import InvalidArgument, LineSearchFailure
from coldcontrol.gpe import first_excited_state, ground_state
from coldcontrol.lattice import BoundTransform, LatticeHamiltonian, landau_zener_hamiltonian, make_fock_basis
from coldcontrol.pair import TensorGrid2D, TwoParticleHamiltonian, first_excited_state_2d, ground_state_2d
from coldcontrol.qoc import (STATUS_COLLECTOR, STATUS_LINE_SEARCH, ControlField, GroupBasis, GroupProblem,
                             InterpolatingStepSizeFinder, LbfgsMemory, Optimizer, SoftBounds,
                             StateTransferProblem, default_stopper, fidelity_above, gradient_h1, gradient_l2,
                             group_gradient, line_search, make_basis_maker, make_collector, make_dgroup,
                             make_grape, make_group, make_sigmoid_shape, make_sine_basis, make_stopper,
                             make_time_control, max_iterations, neg_second_difference, propagate_adjoint,
                             propagate_forward, step_below, grape_optimize, format_iteration)
from coldcontrol.scenarios import exponential_ramp

from conftest import G1D, KAPPA, fd_relative_errors, small_trap, spectral_matrix


def _sine(T, dt, amp=0.55):
    n = int(round(T / dt)) + 1
    ts = np.arange(n) * dt
    return ControlField(amp * np.sin(np.pi * ts / ts[-1]), dt)


def gpe_problem(beta=G1D, T=1.0, dt=0.004, amp=0.55, gamma=0.0, bounds=None, n=32):
    g, H = small_trap(n, beta)
    return StateTransferProblem(H, ground_state(H, 0.0), first_excited_state(H, 0.0), _sine(T, dt, amp),
                                gamma=gamma, bounds=bounds)


def bh_problem(T=0.2, dt=0.002):
    basis = make_fock_basis(3, 3)
    tr = BoundTransform(2.0, 40.0)
    H = LatticeHamiltonian(basis, tr, 1.0, 0.1 * np.linspace(-1, 1, 3) ** 2)
    n = int(round(T / dt)) + 1
    guess = exponential_ramp(2.0, 30.0, T, np.arange(n) * dt, tr)
    return StateTransferProblem(H, H.ground_state(tr.inverse(4.0)), H.ground_state(tr.inverse(30.0)), guess)


def pair_problem(T=0.1, dt=0.002):
    axis, H1 = small_trap(32, 0.0)
    H = TwoParticleHamiltonian(TensorGrid2D(axis), KAPPA, H1.potential, 1.0)
    return StateTransferProblem(H, ground_state_2d(H, 0.0), first_excited_state_2d(H, 0.0), _sine(T, dt),
                                gamma=1e-4, bounds=SoftBounds(2e3, -0.3, 0.3))


def lz_problem(T=1.5, dt=0.01, gamma=0.0):
    H = landau_zener_hamiltonian(1.0)
    n = int(round(T / dt)) + 1
    u = ControlField(np.linspace(-5, 5, n), dt)
    return StateTransferProblem(H, H.eigenstate(-5.0), H.eigenstate(5.0), u, gamma=gamma)


# -- controls ------------------------------------------------------------------------------

def test_make_time_control_examples():
    assert np.allclose(make_time_control(3, 0.5).field(), [0, 0.5, 1.0])
    ts = make_time_control(626, 0.002)
    assert ts.n_steps == 626 and ts.back()[0] == pytest.approx(1.25, abs=1e-12)
    ts = make_time_control(501, 0.0025)
    T = ts.back()[0]
    u = 0.55 * np.sin(np.pi / T * ts)
    assert u.get(250)[0] == pytest.approx(0.55, abs=1e-15)
    with pytest.raises(InvalidArgument):
        make_time_control(1, 0.1)
    with pytest.raises(InvalidArgument):
        make_time_control(5, 0.0)


# -- forward and adjoint -----------------------------------------------------------------------

def test_forward_starts_at_initial_state_and_stationary():
    g, H = small_trap(64)
    psi0 = ground_state(H, 0.0)
    p = StateTransferProblem(H, psi0, psi0, ControlField(np.zeros(201), 0.002))
    states = propagate_forward(p)
    assert len(states) == 201
    assert np.array_equal(states[0].amplitudes, psi0.amplitudes)
    assert p.fidelity() >= 1 - 1e-7


def test_perfect_transfer_has_zero_cost_and_gradient():
    p = gpe_problem()
    target = p.final_state()
    q = StateTransferProblem(p.hamiltonian, p.psi0, target.normalized(), p.control())
    assert q.cost() == pytest.approx(0.0, abs=1e-12)
    assert np.sqrt(np.sum(q.gradient() ** 2) * q.dt) < 1e-6


def test_costate_norm_constant_for_static_linear_dynamics():
    g, H = small_trap(32, 0.0)
    p = StateTransferProblem(H, ground_state(H, 0.0), first_excited_state(H, 0.0),
                             ControlField(np.full(101, 0.3), 0.002))
    chi = propagate_adjoint(p)
    norms = np.array([c.norm() for c in chi])
    assert np.max(np.abs(norms - abs(p.overlap()))) < 1e-10
    assert np.allclose(chi[-1].amplitudes, 1j * p.overlap() * p.psit.amplitudes, atol=1e-14)


def test_costate_matches_dense_backward_oracle():
    g, H = small_trap(32, 0.0)
    p = StateTransferProblem(H, ground_state(H, 0.0), first_excited_state(H, 0.0), _sine(0.2, 0.002, 0.5))
    u, dt = p.values[:, 0], p.dt
    kin = scipy.linalg.expm(-1j * dt * spectral_matrix(g, KAPPA))
    chi = 1j * p.overlap() * p.psit.amplitudes
    for i in range(len(u) - 2, -1, -1):
        half = np.exp(-0.5j * dt * 0.5 * (H.potential.values(u[i]) + H.potential.values(u[i + 1])))
        step = half[:, None] * kin * half[None, :]
        chi = step.conj().T @ chi
    assert np.sqrt(g.dx) * np.linalg.norm(p.costate_trajectory()[0] - chi) < 1e-8


# -- cost ---------------------------------------------------------------------------------------

def test_cost_terms():
    p = lz_problem(gamma=1e-5)
    flat = p.values * 0 + 0.7
    from coldcontrol.qoc import regularization_cost
    assert regularization_cost(flat, p.dt, 1e-5) == 0.0
    b = SoftBounds(2e3, -1.0, 1.0)
    u = np.zeros((11, 1))
    u[4] = 1.1
    assert b.cost(u, 0.01) == pytest.approx(0.5 * 2e3 * 0.01 * 0.01, rel=1e-12)
    u[6] = -1.2
    assert b.cost(u, 0.01) == pytest.approx(0.5 * 2e3 * (0.01 + 0.04) * 0.01, rel=1e-12)
    assert 0.0 <= p.fidelity() <= 1.0
    assert p.cost() == pytest.approx(0.5 * (1 - p.fidelity()) + regularization_cost(p.values, p.dt, 1e-5))


def test_problem_validation():
    g, H = small_trap(32)
    psi = ground_state(H, 0.0)
    with pytest.raises(InvalidArgument):
        StateTransferProblem(H, psi, psi.with_amplitudes(2 * psi.amplitudes), _sine(0.1, 0.01))
    with pytest.raises(InvalidArgument):
        StateTransferProblem(H, psi, psi, _sine(0.1, 0.01), gamma=-1.0)
    with pytest.raises(InvalidArgument):
        StateTransferProblem(H, psi, psi, ControlField(np.zeros((11, 2)), 0.01))


# -- gradients ----------------------------------------------------------------------------------

@pytest.mark.parametrize("name,make", [
    ("gpe-nonlinear", lambda: gpe_problem(G1D, T=0.2, dt=0.002, amp=1.3, gamma=1e-3,
                                          bounds=SoftBounds(2e3, -1.0, 1.0))),
    ("gpe-linear", lambda: gpe_problem(0.0, T=0.2, dt=0.002, gamma=1e-3)),
    ("bose-hubbard", lambda: bh_problem()),
    ("two-particle", lambda: pair_problem()),
    ("landau-zener", lambda: lz_problem(gamma=1e-3)),
])
def test_gradient_matches_finite_differences(name, make):
    p = make()
    errs = fd_relative_errors(p, n_dirs=20, eps=1e-6, seed=7)
    assert np.max(errs) < 1e-4, (name, errs.max())


def test_bound_and_regularization_terms_are_active():
    p = gpe_problem(G1D, T=0.2, dt=0.002, amp=1.3, gamma=1e-3, bounds=SoftBounds(2e3, -1.0, 1.0))
    plain = gpe_problem(G1D, T=0.2, dt=0.002, amp=1.3)
    extra = p.gradient() - plain.gradient()
    assert np.max(np.abs(extra)) > 1.0
    assert p.cost() > plain.cost()


def test_gradient_endpoints_are_zero():
    for p in (gpe_problem(T=0.2, dt=0.002, gamma=1e-3), lz_problem()):
        g = gradient_l2(p)
        assert np.all(g[0] == 0.0) and np.all(g[-1] == 0.0)
        assert np.any(g[1:-1] != 0.0)


def test_h1_gradient():
    dt = 0.01
    assert np.all(gradient_h1(np.zeros(50), dt) == 0)
    rng = np.random.default_rng(3)
    gl2 = rng.normal(size=(50, 2))
    h1 = gradient_h1(gl2, dt)
    assert np.all(h1[0] == 0) and np.all(h1[-1] == 0)
    assert np.max(np.abs(neg_second_difference(h1, dt) - gl2[1:-1])) < 1e-10
    spike = np.zeros(21)
    spike[7] = 1.0
    D = (2 * np.eye(19) - np.eye(19, k=1) - np.eye(19, k=-1)) / dt**2
    ref = np.linalg.solve(D, spike[1:-1])
    out = gradient_h1(spike, dt)
    assert np.allclose(out[1:-1], ref, rtol=1e-12, atol=0)
    tent = out[1:-1]
    peak = int(np.argmax(tent))
    assert peak == 6
    assert np.all(np.diff(tent[: peak + 1]) > 0) and np.all(np.diff(tent[peak:]) < 0)


def test_h1_gradient_of_problem():
    p = gpe_problem(T=0.2, dt=0.002)
    assert np.max(np.abs(neg_second_difference(p.gradient_h1(), p.dt) - p.gradient()[1:-1])) < 1e-10 * max(
        1.0, np.max(np.abs(p.gradient())))


# -- GROUP ----------------------------------------------------------------------------------------

def test_group_gradient_is_quadrature_projection():
    p = gpe_problem(T=0.2, dt=0.002)
    shape = make_sigmoid_shape(p.control().times, 0.999)
    basis = make_sine_basis(8, p.control().times, 0.1, 5, shape)
    g = p.gradient()
    ref = np.zeros((8, 1))
    for m in range(8):
        for i in range(p.n_steps):
            ref[m, 0] += g[i, 0] * basis.functions[i, m] * p.dt
    out = group_gradient(p, basis)
    assert np.max(np.abs(out - ref)) <= 1e-12 * max(1.0, np.max(np.abs(ref)))
    target = GroupProblem(p, basis, u0=p.values)
    assert np.max(np.abs(target.gradient_at(np.zeros((8, 1))) - ref)) <= 1e-12 * max(1.0, np.max(np.abs(ref)))


def test_group_gradient_orthogonal_column():
    p = gpe_problem(T=0.2, dt=0.002)
    g = p.gradient()[:, 0]
    f = make_sine_basis(1, p.control().times).functions[:, 0]
    f = f - (np.dot(f, g) / np.dot(g, g)) * g
    f[0] = f[-1] = 0.0
    assert abs(group_gradient(p, GroupBasis(f))[0, 0]) < 1e-14 * np.linalg.norm(g)


def test_group_gradient_matches_finite_differences():
    p = gpe_problem(T=0.2, dt=0.002, gamma=1e-3)
    shape = make_sigmoid_shape(p.control().times)
    basis = make_sine_basis(6, p.control().times, 0.2, 1, shape)
    target = GroupProblem(p, basis, u0=p.values, coefficients=0.05 * np.arange(6))
    c = target.x
    g = target.gradient_at(c)
    rng = np.random.default_rng(0)
    for _ in range(10):
        dc = rng.normal(size=c.shape)
        fd = (target.cost_at(c + 1e-6 * dc) - target.cost_at(c - 1e-6 * dc)) / 2e-6
        assert abs(fd - np.sum(g * dc)) < 1e-4 * abs(fd)


def test_group_with_identity_basis_matches_grape_first_direction():
    p = gpe_problem(T=0.2, dt=0.002)
    n = p.n_steps
    basis = GroupBasis(np.eye(n)[:, 1:-1])
    grape = make_grape(p.copy(), "bfgs_L2")
    group = make_group(p.copy(), basis)
    d_grape = grape._direction()
    d_group = basis.expand(group._direction())
    assert np.allclose(d_group, d_grape * p.dt, rtol=1e-12, atol=1e-15)


def test_group_control_keeps_boundary_values():
    p = gpe_problem(T=0.2, dt=0.002)
    basis = make_sine_basis(10, p.control().times, 0.3, 2, make_sigmoid_shape(p.control().times))
    target = GroupProblem(p, basis)
    u0 = p.values
    for c in np.random.default_rng(0).normal(size=(5, 10, 1)):
        u = target.control_values(c)
        assert np.array_equal(u[[0, -1]], u0[[0, -1]])


def test_group_coefficient_injection_reproduces_sine_guess():
    p = gpe_problem(T=0.2, dt=0.002)
    basis = make_sine_basis(5, p.control().times)
    c = np.zeros((5, 1))
    c[0, 0] = 0.55
    target = GroupProblem(p.copy(), basis, u0=np.zeros_like(p.values), coefficients=c)
    assert np.allclose(target.control_values(c), p.values, atol=1e-15)


# -- bases -------------------------------------------------------------------------------------------

def test_sine_basis_examples():
    tg = make_time_grid(1.25, 0.0025)
    b = make_sine_basis(60, tg)
    assert b.M == 60
    assert b.functions[250, 0] == pytest.approx(1.0, abs=1e-15)
    assert np.all(b.theta == 0)
    b1, b2 = make_sine_basis(60, tg, 0.1, 42), make_sine_basis(60, tg, 0.1, 42)
    assert np.array_equal(b1.functions, b2.functions) and np.array_equal(b1.theta, b2.theta)
    assert np.all(np.abs(b1.theta) <= 0.1) and np.any(b1.theta != 0)
    with pytest.raises(InvalidArgument):
        make_sine_basis(5, tg, 0.7)
    maker = make_basis_maker(5, tg, 0.1, 9)
    first, second = maker(), maker()
    assert not np.array_equal(first.theta, second.theta)
    assert np.array_equal(make_basis_maker(5, tg, 0.1, 9)().theta, first.theta)


def test_basis_must_vanish_at_ends():
    with pytest.raises(InvalidArgument):
        GroupBasis(np.ones((10, 2)))


@settings(max_examples=20, deadline=None)
@given(st.integers(20, 2000), st.floats(0.5, 0.9999))
def test_sigmoid_shape_properties(n, plateau):
    ts = np.linspace(0, 1.7, n)
    s = make_sigmoid_shape(ts, plateau)
    assert s[0] == 0.0 and s[-1] == 0.0
    assert np.max(np.abs(s - s[::-1])) == 0.0
    assert s.max() == pytest.approx(1.0, abs=1e-15)
    assert np.all(np.diff(s[: n // 2 + 1]) >= -1e-15)


def test_sigmoid_plateau_position():
    tg = make_time_grid(1.0, 0.001)
    s = make_sigmoid_shape(tg, 0.999)
    assert s[500] == pytest.approx(1.0, abs=1e-12)
    assert s[100] == pytest.approx(0.999, abs=1e-9)
    with pytest.raises(InvalidArgument):
        make_sigmoid_shape(tg, 1.0)


# -- L-BFGS and line search ------------------------------------------------------------------------

def test_lbfgs_empty_history_and_restart():
    mem = LbfgsMemory(5)
    g = np.array([1.0, -2.0, 3.0])
    assert np.array_equal(mem.direction(g), -g)
    assert mem.push(np.array([1.0, 0, 0]), np.array([2.0, 0, 0]))
    assert not np.array_equal(mem.direction(g), -g)
    assert not mem.push(np.array([1.0, 0, 0]), np.array([-1.0, 0, 0]))
    assert mem.n_skipped == 1
    mem.reset()
    assert np.array_equal(mem.direction(g), -g)


@pytest.mark.parametrize("d", [2, 5, 8])
def test_lbfgs_quadratic_termination(d):
    rng = np.random.default_rng(d)
    Q = rng.normal(size=(d, d))
    A = Q @ Q.T + d * np.eye(d)
    b = rng.normal(size=d)
    x = np.zeros(d)
    mem = LbfgsMemory(d)
    g = A @ x - b
    for it in range(d + 1):
        p = mem.direction(g)
        alpha = -np.dot(g, p) / np.dot(p, A @ p)
        s = alpha * p
        x = x + s
        g_new = A @ x - b
        mem.push(s, g_new - g)
        g = g_new
        if np.linalg.norm(g) < 1e-10 * np.linalg.norm(b):
            break
    assert np.linalg.norm(g) < 1e-8 * np.linalg.norm(b)
    assert it + 1 <= d + 1


def test_line_search_on_quadratic():
    # phi(a) = (a - 0.7)^2, slope -1.4 at 0
    alpha, f, _ = line_search(lambda a: (a - 0.7) ** 2, 0.49, -1.4, 1.0, 5.0)
    assert abs(alpha - 0.7) < 0.05 * 0.7
    alpha, f, _ = line_search(lambda a: (a - 3.0) ** 2, 9.0, -6.0, 0.5, 5.0)
    assert abs(alpha - 3.0) < 0.05 * 3.0
    alpha, f, _ = line_search(lambda a: (a - 30.0) ** 2, 900.0, -60.0, 1.0, 5.0)
    assert alpha <= 5.0
    with pytest.raises(LineSearchFailure):
        line_search(lambda a: 1.0, 0.0, -1.0, 1.0, 5.0)
    with pytest.raises(LineSearchFailure):
        line_search(lambda a: a, 0.0, 1.0, 1.0, 5.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 50), st.floats(0.1, 20), st.floats(0.01, 3))
def test_line_search_armijo_holds(center, curvature, start):
    def phi(a):
        return curvature * (a - center) ** 2 + 0.1 * np.sin(3 * a)

    d0 = -2 * curvature * center + 0.3
    if d0 >= 0:
        return
    alpha, f, _ = line_search(phi, phi(0.0), d0, start, 5.0)
    assert 0 < alpha <= 5.0
    assert f == phi(alpha)
    assert f <= phi(0.0) + 1e-4 * alpha * d0


def test_step_size_finder_initial_guess():
    finder = InterpolatingStepSizeFinder(5.0, 1.0)
    assert finder.initial_guess(None) == 1.0
    assert finder.initial_guess(0.2) == 0.4
    assert finder.initial_guess(3.0) == 1.0


# -- stoppers and collectors ------------------------------------------------------------------------

class _State:
    def __init__(self, fidelity, step, iteration):
        self.fidelity, self.step_size, self.iteration = fidelity, step, iteration


def test_default_stopper_examples():
    s = default_stopper()
    assert s.reason(_State(0.9995, 1e-3, 10)) == "fidelity criterion satisfied"
    assert s.reason(_State(0.5, 1e-3, 2000)) == "Max iterations exceeded"
    assert s.reason(_State(0.5, 1e-8, 10)) == "Step size too small"
    assert s.reason(_State(0.5, 1e-3, 10)) is None
    assert s.reason(_State(0.5, None, 0)) is None
    custom = make_stopper(lambda o: o.iteration == 3, fidelity_above(0.9))
    assert custom(_State(0.1, 1.0, 3)) and custom(_State(0.95, 1.0, 0)) and not custom(_State(0.1, 1.0, 2))
    assert make_stopper([step_below(1e-3), max_iterations(5)])(_State(0.0, 1e-4, 0))


def _run_recorded(opt):
    rec = {"u": [], "cost": [], "fid": [], "steps": [], "prop": []}

    def collect(o):
        rec["u"].append(o.problem.values)
        rec["cost"].append(o.cost)
        rec["fid"].append(o.fidelity)
        rec["prop"].append(o.n_propagation_steps)
        format_iteration(o)

    opt.collector = make_collector(collect)
    return opt.run(), rec


@pytest.fixture(scope="module")
def optimizer_runs():
    out = {}
    stop = default_stopper(0.9, 1e-7, 25)
    p = gpe_problem(gamma=1e-5, bounds=SoftBounds(2e3, -1, 1))
    times = p.control().times
    shape = make_sigmoid_shape(times)
    out["grape"] = _run_recorded(make_grape(p.copy(), "bfgs_L2", stopper=stop))
    out["grape_h1"] = _run_recorded(make_grape(p.copy(), "steepest_H1", stopper=default_stopper(0.9, 1e-7, 10)))
    out["group"] = _run_recorded(make_group(p.copy(), make_sine_basis(20, times, 0.0, None, shape), stopper=stop))
    dg = make_dgroup(p.copy(), make_basis_maker(20, times, 0.1, 3, shape), stopper=stop,
                     restarter=lambda o: o.iteration % 6 == 0)
    out["dgroup"] = _run_recorded(dg)
    out["u0"] = p.values
    return out


@pytest.mark.parametrize("alg", ["grape", "grape_h1", "group", "dgroup"])
def test_optimizer_invariants(optimizer_runs, alg):
    result, rec = optimizer_runs[alg]
    u0 = optimizer_runs["u0"]
    assert result.ok
    assert len(result.fidelity_history) == result.iterations + 1 == len(rec["fid"])
    assert all(b <= a for a, b in zip(rec["cost"], rec["cost"][1:]))
    assert all(b > a for a, b in zip(rec["prop"], rec["prop"][1:]))
    for u in rec["u"]:
        assert np.array_equal(u[[0, -1]], u0[[0, -1]])
    replay = gpe_problem(gamma=1e-5, bounds=SoftBounds(2e3, -1, 1))
    for u, f in list(zip(rec["u"], rec["fid"]))[::5]:
        assert replay.fidelity_at(u) == pytest.approx(f, abs=1e-13)
    assert result.fidelity_history[-1] > result.fidelity_history[0]


def test_dgroup_restarted(optimizer_runs):
    result, _ = optimizer_runs["dgroup"]
    assert result.superiterations >= 2


def test_dressing_absorption_preserves_cost_and_control():
    p = gpe_problem(T=0.4)
    times = p.control().times
    opt = make_dgroup(p, make_basis_maker(10, times, 0.2, 1, make_sigmoid_shape(times)),
                      stopper=default_stopper(0.999, 1e-7, 3))
    opt.run()
    before_u, before_cost = p.values, opt.cost
    opt._restart()
    assert np.max(np.abs(p.values - before_u)) <= 1e-14
    assert abs(opt.cost - before_cost) <= 1e-12
    assert np.all(opt.target.x == 0)


def test_collector_failure_aborts():
    p = lz_problem()

    def boom(o):
        if o.iteration == 2:
            raise RuntimeError("disk full")

    result = grape_optimize(p, collector=make_collector(boom))
    assert result.status == STATUS_COLLECTOR
    assert result.iterations == 2
    assert isinstance(result.error, RuntimeError)


class _Flat:
    """Toy problem whose cost is undefined away from the start."""

    n_propagation_steps = 0
    n_steps = 3
    dt = 1.0

    def __init__(self):
        self.values = np.zeros(3)

    def update(self, x):
        self.values = np.array(x)

    def cost_at(self, x):
        return 1.0 if not np.any(x) else np.inf

    def gradient_at(self, x):
        return np.array([0.0, -1.0, 0.0])

    def fidelity_at(self, x):
        return 0.0


def test_line_search_failure_status():
    result = make_grape(_Flat(), "bfgs_L2").run()
    assert result.status == STATUS_LINE_SEARCH


class _Quadratic:
    n_steps = 2
    dt = 1.0

    def __init__(self, A, b):
        self.A, self.b = A, b
        self.values = np.zeros(len(b))
        self.n_propagation_steps = 0

    def update(self, x):
        self.values = np.array(x)

    def cost_at(self, x):
        self.n_propagation_steps += 1
        return 0.5 * x @ self.A @ x - self.b @ x

    def gradient_at(self, x):
        return self.A @ x - self.b

    def fidelity_at(self, x):
        return 0.0


def test_lbfgs_optimizer_on_quadratic():
    rng = np.random.default_rng(0)
    Q = rng.normal(size=(12, 12))
    A = Q @ Q.T / 12 + np.eye(12)
    prob = _Quadratic(A, rng.normal(size=12))
    stop = make_stopper(lambda o: np.linalg.norm(o.gradient) < 1e-8, max_iterations(50))
    result = make_grape(prob, "bfgs_L2", stopper=stop).run()
    assert result.iterations < 50
    assert np.linalg.norm(prob.gradient_at(prob.values)) < 1e-8


def test_few_mode_problem_converges():
    p = lz_problem()
    stop = make_stopper(lambda o: np.sqrt(np.sum(o.gradient**2) * p.dt) < 1e-8, max_iterations(50))
    result = grape_optimize(p, stopper=stop)
    assert result.iterations < 50
    assert result.fidelity > 0.999999


def test_optimizer_rejects_unknown_variant():
    with pytest.raises(InvalidArgument):
        make_grape(lz_problem(), "newton_L2")
    with pytest.raises(InvalidArgument):
        Optimizer(None, "conjugate")


def test_steepest_vs_lbfgs_head_to_head(record_property):
    p = gpe_problem()
    counts = {}
    for variant in ("bfgs_L2", "steepest_L2"):
        r = grape_optimize(p.copy(), variant, stopper=default_stopper(0.9, 1e-9, 300))
        counts[variant] = r.iterations if r.fidelity > 0.9 else None
    record_property("iterations_to_F0.9", counts)
    assert counts["bfgs_L2"] is not None
