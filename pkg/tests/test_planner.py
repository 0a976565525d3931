import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flatform import planner
from flatform.errors import DomainError, PlannerSingularError
from flatform.flat_dynamics import build_costs, control_jerks, positions
from flatform.expm import matrix_exponential

from conftest import make_spec, random_state
from oracles import discrete_lq_oracle, hand_hamiltonian


def _two_uav(offset=(3.0, 0.0, 0.0), mu=1.0, omega=2.0):
    spec = make_spec(2, [(1, 2)], mu=[mu], omega=[omega], offsets=[offset])
    return build_costs(spec)


def _r0(n=2, seed=0):
    return random_state(np.random.default_rng(seed), n, scale=2.0)


def test_hamiltonian_matches_hand_construction():
    cost = build_costs(make_spec(1, []))
    M = planner.build_hamiltonian(cost)
    np.testing.assert_array_equal(M, hand_hamiltonian(cost.A, cost.B, cost.Q, cost.R))
    cost = _two_uav()
    M = planner.build_hamiltonian(cost)
    np.testing.assert_allclose(M, hand_hamiltonian(cost.A, cost.B, cost.Q, cost.R), atol=1e-15)


def test_hamiltonian_structure():
    cost = _two_uav()
    M = planner.build_hamiltonian(cost)
    n = cost.state_dim
    assert abs(np.trace(M)) <= 1e-12
    S = -M[:n, n:]
    assert np.linalg.eigvalsh(0.5 * (S + S.T)).min() >= -1e-12
    # Hamiltonian matrices satisfy (JM)^T = JM
    J = np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])
    np.testing.assert_allclose((J @ M).T, J @ M, atol=1e-12)


def test_blocks_at_zero_are_identity_and_terminal_weight():
    cost = _two_uav()
    M = planner.build_hamiltonian(cost)
    H, G = planner.hamiltonian_blocks(M, cost.Q_f, 0.0)
    np.testing.assert_array_equal(H, np.eye(cost.state_dim))
    np.testing.assert_array_equal(G, cost.Q_f)


def test_boundary_conditions():
    cost = _two_uav()
    r0 = _r0()
    sol = planner.solve(cost, r0, 4.0)
    np.testing.assert_allclose(sol.sample_state(0.0), r0, rtol=1e-9, atol=1e-9)
    r_end = sol.augmented(4.0)[:cost.state_dim]
    np.testing.assert_allclose(r_end, sol.w, rtol=1e-12, atol=1e-12)
    # transversality: costate(t_f) = Q_f r(t_f)
    np.testing.assert_allclose(sol.costate(4.0), cost.Q_f @ r_end, atol=1e-10)
    assert sol.sample_state(2.0)[-1] == 1.0


def test_derivatives_match_finite_differences():
    cost = _two_uav()
    sol = planner.solve(cost, _r0(), 4.0)
    h = 1e-4
    for t in (0.5, 1.7, 3.2):
        rp, rm = sol.sample_state(t + h), sol.sample_state(t - h)
        rdot = (rp - rm) / (2 * h)
        r = sol.sample_state(t)
        u = sol.sample_control(t)
        residual = rdot - (cost.A @ r + cost.B @ u)
        assert np.abs(residual).max() <= 1e-6 * max(1.0, np.abs(rdot).max())
        # jerk column equals the derivative of the acceleration slots
        acc_dot = rdot[16:24]
        np.testing.assert_allclose(acc_dot, u, atol=1e-6 * max(1.0, np.abs(u).max()))


def test_costate_equation_residual():
    cost = _two_uav()
    sol = planner.solve(cost, _r0(), 4.0)
    n = cost.state_dim
    h = 1e-4
    for t in (0.4, 2.0, 3.6):
        y = sol.augmented(t)
        ydot = (sol.augmented(t + h) - sol.augmented(t - h)) / (2 * h)
        np.testing.assert_allclose(ydot, sol.M @ y, atol=1e-6 * max(1.0, np.abs(ydot).max()))
        lam_dot = ydot[n:]
        np.testing.assert_allclose(lam_dot, -cost.Q @ y[:n] - cost.A.T @ y[n:], atol=1e-5)


def test_matches_discrete_lq_oracle():
    cost = _two_uav()
    r0 = _r0()
    t_f = 2.0
    sol = planner.solve(cost, r0, t_f)
    ref = {}
    for dt in (0.02, 0.01):
        xs = discrete_lq_oracle(cost.A, cost.B, cost.Q, cost.Q_f, cost.R, r0, t_f, dt)
        ts = np.arange(len(xs)) * dt
        plan = np.array([sol.sample_state(t) for t in ts])
        ref[dt] = np.abs(xs - plan).max()
    # piecewise-constant controls converge to the continuous optimum at first order
    assert ref[0.01] < ref[0.02]
    assert ref[0.01] <= 2e-2 * np.abs(r0).max()


def _cost_of(cost, t, states, controls):
    run = (np.einsum("ki,ij,kj->k", states, cost.Q, states)
           + np.einsum("ki,ij,kj->k", controls, cost.R, controls))
    return np.trapezoid(run, t) + states[-1] @ cost.Q_f @ states[-1]


def test_plan_beats_perturbed_controls():
    cost = _two_uav()
    r0 = _r0()
    t_f = 2.0
    sol = planner.solve(cost, r0, t_f)
    t = np.linspace(0.0, t_f, 2001)
    states, controls = sol.sample(t)
    J_opt = _cost_of(cost, t, states, controls)
    dt = t[1] - t[0]
    Phi = matrix_exponential(cost.A * dt)
    rng = np.random.default_rng(3)
    for _ in range(4):
        c = rng.normal(size=controls.shape[1])
        du = np.sin(np.pi * t / t_f)[:, None] * c
        for eps in (0.3, -0.3):
            # the perturbation drives a triple integrator from rest: integrate it exactly
            dx = np.zeros_like(states)
            for k in range(len(t) - 1):
                a = 0.5 * (du[k] + du[k + 1]) * eps
                dx[k + 1] = Phi @ dx[k] + cost.B @ a * dt + cost.A @ cost.B @ a * dt ** 2 / 2 \
                    + cost.A @ cost.A @ cost.B @ a * dt ** 3 / 6
            J = _cost_of(cost, t, states + dx, controls + eps * du)
            assert J > J_opt


def test_zero_cost_gives_zero_control():
    spec = make_spec(2, [(1, 2)], offsets=[[0.0, 0.0, 0.0]])
    cost = build_costs(spec)
    # both UAVs already in formation and velocity consensus
    r0 = np.zeros(cost.state_dim)
    r0[:6] = [1.0, 2.0, 3.0, 1.0, 2.0, 3.0]
    r0[-1] = 1.0
    sol = planner.solve(cost, r0, 3.0)
    for t in (0.0, 1.5, 3.0):
        assert np.abs(sol.sample_control(t)).max() <= 1e-10


def test_control_decays_toward_terminal_time():
    cost = _two_uav()
    sol = planner.solve(cost, _r0(), 8.0)
    assert np.linalg.norm(sol.sample_control(8.0)) < np.linalg.norm(sol.sample_control(0.0))


def test_domain_errors():
    cost = _two_uav()
    with pytest.raises(DomainError):
        planner.solve(cost, _r0(), 0.0)
    with pytest.raises(DomainError):
        planner.solve(cost, np.ones(5), 1.0)
    sol = planner.solve(cost, _r0(), 1.0)
    with pytest.raises(DomainError):
        sol.sample_state(1.5)
    with pytest.raises(DomainError):
        sol.sample_state(-0.1)
    with pytest.raises(DomainError):
        sol.lattice(0.0)
    with pytest.raises(DomainError):
        sol.lattice(0.1).state(11)


def test_singular_horizon_raises():
    cost = _two_uav(mu=50.0, omega=50.0)
    with pytest.raises(PlannerSingularError) as err:
        planner.solve(cost, _r0(), 400.0)
    assert err.value.rcond is not None


def test_sampling_is_deterministic():
    cost = _two_uav()
    a = planner.solve(cost, _r0(), 3.0).sample(np.linspace(0, 3, 7))
    b = planner.solve(cost, _r0(), 3.0).sample(np.linspace(0, 3, 7))
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 31 - 1), step=st.sampled_from([0.01, 0.05, 0.25]))
def test_lattice_matches_fresh_sampling(seed, step):
    cost = _two_uav()
    sol = planner.solve(cost, _r0(seed=seed), 2.0)
    lat = sol.lattice(step)
    assert lat.count == int(round(2.0 / step)) + 1
    rng = np.random.default_rng(seed)
    for k in rng.integers(0, lat.count, size=5):
        t = lat.time(k)
        r = sol.sample_state(t)
        assert np.abs(lat.state(k) - r).max() <= 1e-10 * max(1.0, np.abs(r).max())
        u = sol.sample_control(t)
        assert np.abs(lat.control(k) - u).max() <= 1e-9 * max(1.0, np.abs(u).max())


def test_plan_converges_to_formation(four_uav):
    sol = planner.solve(four_uav.costs(), four_uav.initial_state, four_uav.t_f)
    spec = four_uav.formation
    p0 = positions(sol.sample_state(0.0))
    pf = positions(sol.sample_state(four_uav.t_f))
    err = lambda p: sum(np.sum((p[i] - p[j] - d) ** 2)
                        for (i, j), d in zip(spec.formation_graph.edges, spec.offsets))
    assert err(pf) < 1e-3 * err(p0)
    assert control_jerks(sol.sample_control(1.0)[None]).shape == (1, 4, 3)
