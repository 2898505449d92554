"""Special-case solution paths against the generic solver."""

import numpy as np
import pytest
from scipy.linalg import expm

from idepcag import (
    IVP,
    ImpulseSequence,
    LinearSystem,
    MatrixFunction,
    UniformGrid,
    VectorFunction,
    build,
    solve,
)
from idepcag.closedforms import (
    ConstantSystem,
    e_tilde,
    solve_advanced,
    solve_b_only,
    solve_constant,
    solve_delayed,
)
from idepcag.errors import GridError, SingularMatrixError
from idepcag.kernel import KernelEngine
from idepcag.transition import TransitionEngine
from tests.conftest import random_passing_ivp


def small_partition(beta=0.5):
    return build(UniformGrid(h=0.7, beta=beta), (0.0, 3.5))


def test_e_tilde_at_zero_is_identity():
    cs = ConstantSystem(A=[[0.5]], B=[[0.3]], C=[[0.0]], partition=small_partition())
    assert np.allclose(e_tilde(cs, 0.0), np.eye(1), atol=1e-15)


def test_e_tilde_without_b_is_exponential():
    A = np.array([[0.4, 0.1], [-0.2, 0.3]])
    cs = ConstantSystem(A=A, B=np.zeros((2, 2)), C=np.zeros((2, 2)), partition=small_partition())
    assert np.allclose(e_tilde(cs, 1.3), expm(1.3 * A), atol=1e-12)


def test_e_tilde_scalar_value():
    # a = b = 1, t = 1: e (1 + (1 - e^-1)) = 2e - 1
    cs = ConstantSystem(A=[[1.0]], B=[[1.0]], C=[[0.0]], partition=small_partition())
    assert e_tilde(cs, 1.0)[0, 0] == pytest.approx(2 * np.e - 1, rel=1e-14)


def test_e_tilde_matches_kernel_e(rng):
    A = np.array([[0.3, -0.1], [0.05, 0.2]])
    B = np.array([[0.1, 0.04], [-0.06, 0.15]])
    cs = ConstantSystem(A=A, B=B, C=np.zeros((2, 2)), partition=small_partition())
    ke = KernelEngine(TransitionEngine(MatrixFunction.constant(A)), MatrixFunction.constant(B))
    for _ in range(5):
        tau = float(rng.uniform(0.0, 2.0))
        t = tau + float(rng.uniform(0.0, 1.5))
        assert np.linalg.norm(e_tilde(cs, t - tau) - ke.e_matrix(t, tau), 2) <= 1e-9


def test_singular_a_rejected():
    with pytest.raises(SingularMatrixError):
        ConstantSystem(A=[[0.0]], B=[[0.1]], C=[[0.0]], partition=small_partition())


def constant_ivp(rng, beta=0.5, forced=True):
    p = small_partition(beta)
    A = rng.uniform(-0.25, 0.25, (2, 2)) + 0.3 * np.eye(2)
    B = rng.uniform(-0.15, 0.15, (2, 2))
    C = rng.uniform(-0.15, 0.15, (2, 2))
    D = rng.uniform(-0.5, 0.5, 2) if forced else None
    F = VectorFunction(["0.4", "-0.2"]) if forced else None
    system = LinearSystem(
        A=MatrixFunction.constant(A),
        B=MatrixFunction.constant(B),
        F=F,
        impulses=ImpulseSequence.constant(C=C, D=D, n=2),
    )
    tau = 0.0 if rng.random() < 0.5 else float(rng.uniform(0.05, 0.6))
    ivp = IVP(system=system, partition=p, tau=tau, y0=rng.uniform(-1, 1, 2))
    return ConstantSystem(A=A, B=B, C=C, partition=p), ivp


def test_constant_unforced_pure_exponential():
    A = np.array([[0.2, 0.05], [-0.1, 0.3]])
    p = small_partition()
    cs = ConstantSystem(A=A, B=np.zeros((2, 2)), C=np.zeros((2, 2)), partition=p)
    ivp = IVP(
        system=LinearSystem(A=MatrixFunction.constant(A), B=MatrixFunction.zero(2)),
        partition=p,
        tau=0.0,
        y0=[1.0, -0.5],
    )
    for t in [0.5, 1.4, 3.0]:
        expected = expm(A * t) @ ivp.y0
        assert np.linalg.norm(solve_constant(cs, ivp, t) - expected) <= 1e-10


def test_constant_matches_generic(rng):
    cs, ivp = constant_ivp(rng)
    for t in np.linspace(ivp.tau, 3.5, 8):
        a = solve(ivp, float(t))
        b = solve_constant(cs, ivp, float(t))
        assert np.linalg.norm(a - b) <= 1e-8 * (1 + np.linalg.norm(a))


def test_power_path_matches_product_on_uniform_geometry(rng):
    cs, ivp = constant_ivp(rng, beta=0.5)
    for t in np.linspace(ivp.tau + 0.1, 3.5, 6):
        a = solve_constant(cs, ivp, float(t), path="product")
        b = solve_constant(cs, ivp, float(t), path="power")
        assert np.linalg.norm(a - b) <= 1e-10 * (1 + np.linalg.norm(a))


def test_power_path_rejects_ragged_geometry(rng):
    from idepcag.grid import ExplicitGrid

    nodes = (0.0, 1.0, 2.5, 3.0)
    p = build(ExplicitGrid(nodes=nodes, anchors=(0.5, 1.5, 2.8)), (0.0, 3.0))
    A = 0.3 * np.eye(1)
    cs = ConstantSystem(A=A, B=[[0.1]], C=[[0.05]], partition=p)
    ivp = IVP(
        system=LinearSystem(
            A=MatrixFunction.constant(A),
            B=MatrixFunction.constant([[0.1]]),
            impulses=ImpulseSequence.constant(C=[[0.05]], n=1),
        ),
        partition=p,
        tau=0.0,
        y0=[1.0],
    )
    with pytest.raises(GridError):
        solve_constant(cs, ivp, 2.9, path="power")


def test_delayed_path_matches_generic(rng):
    for _ in range(3):
        ivp = random_passing_ivp(rng, anchor_style="delayed", n_intervals=6)
        ts = np.linspace(ivp.tau, ivp.partition.window[1], 7)
        for t in ts:
            a = solve(ivp, float(t))
            b = solve_delayed(ivp, float(t))
            assert np.linalg.norm(a - b) <= 1e-8 * (1 + np.linalg.norm(a))


def test_advanced_path_matches_generic(rng):
    for _ in range(3):
        ivp = random_passing_ivp(rng, anchor_style="advanced", n_intervals=6)
        ts = np.linspace(ivp.tau, ivp.partition.window[1], 7)
        for t in ts:
            a = solve(ivp, float(t))
            b = solve_advanced(ivp, float(t))
            assert np.linalg.norm(a - b) <= 1e-8 * (1 + np.linalg.norm(a))


def test_delayed_unforced_is_exponential_product():
    # with B = 0, C = 0, f = 0 the delayed path is the bare flow of A
    p = build(UniformGrid(h=1.0, beta=0.0), (0.0, 3.0))
    A = np.array([[0.3]])
    ivp = IVP(
        system=LinearSystem(A=MatrixFunction.constant(A), B=MatrixFunction.zero(1)),
        partition=p,
        tau=0.0,
        y0=[2.0],
    )
    got = solve_delayed(ivp, 2.5)
    assert got[0] == pytest.approx(np.exp(0.3 * 2.5) * 2.0, rel=1e-9)


def test_delayed_requires_left_anchors(rng):
    ivp = random_passing_ivp(rng, anchor_style="advanced", n_intervals=6)
    with pytest.raises(GridError):
        solve_delayed(ivp, ivp.tau + 0.1)


def test_b_only_pure_impulse_product():
    p = build(UniformGrid(h=1.0, beta=0.5), (0.0, 4.0))
    C = {k: np.array([[0.1 * k]]) for k in range(1, 5)}
    ivp = IVP(
        system=LinearSystem(
            A=MatrixFunction.zero(1),
            B=MatrixFunction.zero(1),
            impulses=ImpulseSequence(n=1, c_items=C),
        ),
        partition=p,
        tau=0.0,
        y0=[1.0],
    )
    got = solve_b_only(ivp, 3.5)
    expected = np.prod([1 + 0.1 * k for k in range(1, 4)])
    assert got[0] == pytest.approx(expected, rel=1e-12)


def test_b_only_matches_generic(rng):
    for _ in range(3):
        ivp = random_passing_ivp(rng, forced=False, with_offsets=False, n_intervals=6)
        system = LinearSystem(
            A=MatrixFunction.zero(ivp.n), B=ivp.system.B, impulses=ivp.system.impulses
        )
        ivp0 = IVP(system=system, partition=ivp.partition, tau=ivp.tau, y0=ivp.y0)
        for t in np.linspace(ivp0.tau, ivp0.partition.window[1], 7):
            a = solve(ivp0, float(t))
            b = solve_b_only(ivp0, float(t))
            assert np.linalg.norm(a - b) <= 1e-9 * (1 + np.linalg.norm(a))


def test_b_only_rejects_nonzero_a_or_forcing():
    p = build(UniformGrid(h=1.0), (0.0, 2.0))
    bad_a = IVP(
        system=LinearSystem(A=MatrixFunction.constant([[0.1]]), B=MatrixFunction.zero(1)),
        partition=p,
        tau=0.0,
        y0=[1.0],
    )
    with pytest.raises(GridError):
        solve_b_only(bad_a, 1.0)
    forced = IVP(
        system=LinearSystem(
            A=MatrixFunction.zero(1), B=MatrixFunction.zero(1), F=VectorFunction(["1"])
        ),
        partition=p,
        tau=0.0,
        y0=[1.0],
    )
    with pytest.raises(ValueError):
        solve_b_only(forced, 1.0)
