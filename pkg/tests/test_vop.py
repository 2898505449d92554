"""Variation-of-parameters solver: formula terms, Green kernel, trajectories."""

import numpy as np
import pytest

from idepcag import (
    IVP,
    ImpulseSequence,
    LinearSystem,
    MatrixFunction,
    UniformGrid,
    VectorFunction,
    VopSolver,
    build,
    discrete_solution,
    green_kernel,
    sample_trajectory,
    solve,
    solve_via_green,
)
from idepcag.errors import GridError, HypothesisError
from idepcag.fundamental import FundamentalEngine
from idepcag.kernel import KernelEngine
from idepcag.oracle import PicardConfig, PicardSolver
from idepcag.transition import TransitionEngine
from tests.conftest import random_passing_ivp


def test_solution_at_tau_is_y0():
    ivp = random_passing_ivp(np.random.default_rng(1))
    assert np.array_equal(solve(ivp, ivp.tau), ivp.y0)


def test_unforced_equals_homogeneous(rng):
    ivp = random_passing_ivp(rng, forced=False)
    tr = TransitionEngine(ivp.system.A)
    fund = FundamentalEngine(
        KernelEngine(tr, ivp.system.B), ivp.partition, ivp.system.impulses
    )
    for t in np.linspace(ivp.tau, ivp.partition.window[1], 9):
        expected = fund.w_global(float(t), ivp.tau) @ ivp.y0
        assert np.linalg.norm(solve(ivp, float(t)) - expected) <= 1e-10


def test_zero_system_is_constant():
    p = build(UniformGrid(h=1.0, beta=0.5), (0.0, 4.0))
    ivp = IVP(
        system=LinearSystem(A=MatrixFunction.zero(2), B=MatrixFunction.zero(2)),
        partition=p,
        tau=0.0,
        y0=[1.0, -2.0],
    )
    for t in [0.0, 0.5, 1.0, 2.7, 4.0]:
        assert np.array_equal(solve(ivp, t), ivp.y0)


def test_oracle_equivalence_small_batch(rng):
    for _ in range(5):
        ivp = random_passing_ivp(rng)
        solver = VopSolver(ivp)
        oracle = PicardSolver(ivp, PicardConfig(grid_points_per_interval=2048))
        lo, hi = ivp.tau, ivp.partition.window[1]
        for t in rng.uniform(lo, hi, 8):
            y = solver.solve(float(t))
            ref = oracle.solve(float(t))
            assert np.linalg.norm(y - ref) <= 1e-6 * (1 + np.linalg.norm(y))


def test_superposition(rng):
    base = random_passing_ivp(rng, forced=False, with_offsets=False)
    f1 = VectorFunction(["0.5*cos(t)"] * base.n)
    f2 = VectorFunction(["0.3 - 0.1*t"] * base.n)
    f12 = VectorFunction(["0.5*cos(t) + 0.3 - 0.1*t"] * base.n)

    def forced(F):
        system = LinearSystem(
            A=base.system.A, B=base.system.B, F=F, impulses=base.system.impulses
        )
        return IVP(system=system, partition=base.partition, tau=base.tau, y0=np.zeros(base.n))

    t = float(base.partition.window[1]) - 0.1
    y1 = solve(forced(f1), t)
    y2 = solve(forced(f2), t)
    y12 = solve(forced(f12), t)
    assert np.linalg.norm(y12 - (y1 + y2)) <= 1e-9


def test_continuity_across_anchors(rng):
    ivp = random_passing_ivp(rng, n_intervals=6)
    solver = VopSolver(ivp)
    p = ivp.partition
    ktau = solver.ktau
    for k in range(ktau, p.n_intervals):
        z = float(p.anchors[k])
        if z <= max(ivp.tau, float(p.nodes[k])) or z >= float(p.nodes[k + 1]):
            continue
        eps = 1e-7
        gap = np.linalg.norm(solver.solve(z + eps) - solver.solve(z - eps))
        assert gap <= 1e-4  # O(eps) * derivative scale


def test_node_rows_and_jump_identity(rng):
    ivp = random_passing_ivp(rng, n_intervals=6, tau_on_node=True)
    p = ivp.partition
    times = sorted(set([float(p.nodes[2]), float(p.nodes[4])] + list(np.linspace(ivp.tau, p.window[1], 7))))
    traj = sample_trajectory(ivp, times)
    # each interior node contributes a left-limit row then a post row
    for j in (2, 4):
        tj = float(p.nodes[j])
        rows = np.where(traj.times == tj)[0]
        assert len(rows) == 2
        assert traj.is_left_limit[rows[0]] and not traj.is_left_limit[rows[1]]
        left = traj.values[rows[0]]
        post = traj.values[rows[1]]
        jump = np.eye(ivp.n) + ivp.system.impulses.c_at(j)
        expected = jump @ left + ivp.system.impulses.d_at(j)
        assert np.linalg.norm(post - expected) <= 1e-8 * (1 + np.linalg.norm(post))


def test_trajectory_single_time_tau():
    ivp = random_passing_ivp(np.random.default_rng(3), tau_on_node=True)
    traj = sample_trajectory(ivp, [ivp.tau])
    assert traj.times.shape == (1,)
    assert np.array_equal(traj.values[0], ivp.y0)
    assert not traj.is_left_limit[0]


def test_trajectory_serialization_shapes(rng):
    import io
    import json

    ivp = random_passing_ivp(rng, n_intervals=6, tau_on_node=True)
    times = np.linspace(ivp.tau, ivp.partition.window[1], 5)
    traj = sample_trajectory(ivp, times)
    buf = io.StringIO()
    traj.to_csv(buf)
    lines = buf.getvalue().strip().split("\n")
    assert lines[0] == ",".join(traj.column_names())
    assert len(lines) == 1 + traj.times.shape[0]
    obj = json.loads(json.dumps(traj.to_json_obj()))
    assert obj["columns"][0] == "t"
    assert len(obj["rows"]) == traj.times.shape[0]


def test_discrete_solution_geometric():
    alpha, beta, x0 = 0.9, 1.2, 1.8
    p = build(UniformGrid(h=1.0), (0.0, 6.0))
    ivp = IVP(
        system=LinearSystem(
            A=MatrixFunction.zero(1),
            B=MatrixFunction.constant([[alpha - 1.0]]),
            impulses=ImpulseSequence.constant(C=[[beta - 1.0]], n=1),
        ),
        partition=p,
        tau=0.0,
        y0=[x0],
    )
    nodes = discrete_solution(ivp, 6)
    for n in range(7):
        assert nodes[n][0] == pytest.approx((alpha * beta) ** n * x0, rel=1e-11)


def test_discrete_solution_constant_sequence():
    p = build(UniformGrid(h=1.0, beta=0.5), (0.0, 5.0))
    ivp = IVP(
        system=LinearSystem(A=MatrixFunction.zero(1), B=MatrixFunction.zero(1)),
        partition=p,
        tau=0.0,
        y0=[3.3],
    )
    nodes = discrete_solution(ivp, 5)
    assert np.allclose(nodes, 3.3)


def test_discrete_solution_matches_solve_at_nodes(rng):
    for _ in range(3):
        ivp = random_passing_ivp(rng, n=2, n_intervals=7)
        solver = VopSolver(ivp)
        nodes = solver.discrete_solution(7)
        for i, k in enumerate(range(solver.ktau, 8)):
            t = ivp.tau if i == 0 else float(ivp.partition.nodes[k])
            direct = solver.solve(t)
            assert np.linalg.norm(nodes[i] - direct) <= 1e-8 * (1 + np.linalg.norm(direct))


def test_green_kernel_at_s_equals_t(rng):
    ivp = random_passing_ivp(rng)
    t = float(ivp.partition.window[1]) - 0.05
    assert np.array_equal(green_kernel(ivp, t, t), np.eye(ivp.n))


def test_green_kernel_classical_reduction(rng):
    # B = 0, C = 0: the kernel is the plain transition matrix everywhere
    ivp = random_passing_ivp(rng, with_impulses=False, with_offsets=False)
    system = LinearSystem(A=ivp.system.A, B=MatrixFunction.zero(ivp.n), F=ivp.system.F)
    ivp0 = IVP(system=system, partition=ivp.partition, tau=ivp.tau, y0=ivp.y0)
    solver = VopSolver(ivp0)
    t = float(ivp0.partition.window[1]) - 0.02
    for s in np.linspace(ivp0.tau, t, 7):
        G = solver.green_kernel(t, float(s))
        assert np.linalg.norm(G - solver.transition.phi(t, float(s)), 2) <= 1e-9


def test_green_integral_reproduces_solve(rng):
    for _ in range(3):
        ivp = random_passing_ivp(rng)
        solver = VopSolver(ivp)
        lo, hi = ivp.tau, ivp.partition.window[1]
        for t in rng.uniform(lo, hi, 4):
            y = solver.solve(float(t))
            g = solver.solve_via_green(float(t))
            assert np.linalg.norm(y - g) <= 1e-8 * (1 + np.linalg.norm(y))


def test_green_kernel_requires_order(rng):
    ivp = random_passing_ivp(rng)
    t = float(ivp.partition.window[1]) - 0.3
    with pytest.raises(GridError):
        green_kernel(ivp, t, t + 0.1)


def test_hypothesis_gate_and_force():
    # B = -1 with delayed unit intervals makes the delayed kernel pair
    # J(t_{k+1}, zeta_k) exactly singular, failing the gate; the solution
    # formula never inverts that pair, so force still solves
    p = build(UniformGrid(h=1.0, beta=0.0), (0.0, 3.0))
    ivp = IVP(
        system=LinearSystem(A=MatrixFunction.zero(1), B=MatrixFunction.constant([[-1.0]])),
        partition=p,
        tau=0.0,
        y0=[1.0],
    )
    solver = VopSolver(ivp)
    with pytest.raises(HypothesisError):
        solver.solve(0.4)
    got = solver.solve(0.4, force=True)
    assert got[0] == pytest.approx(1.0 - 0.4, abs=1e-12)  # x(t) = 1 - t on [0, 1)
    assert solver.solve(2.5, force=True)[0] == pytest.approx(0.0, abs=1e-12)


def test_time_window_enforced(rng):
    ivp = random_passing_ivp(rng)
    with pytest.raises(GridError):
        solve(ivp, ivp.tau - 0.5)
    with pytest.raises(GridError):
        solve(ivp, ivp.partition.window[1] + 0.5)


def test_left_limit_only_at_nodes(rng):
    ivp = random_passing_ivp(rng, tau_on_node=True)
    solver = VopSolver(ivp)
    with pytest.raises(GridError):
        solver.left_limit(ivp.tau + 0.05)
    with pytest.raises(GridError):
        solver.left_limit(ivp.tau)
