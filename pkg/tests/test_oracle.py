"""Fixed-point oracle, contraction report, and the difference stepper."""

import numpy as np
import pytest

from idepcag import (
    IVP,
    ImpulseSequence,
    LinearSystem,
    MatrixFunction,
    UniformGrid,
    VectorFunction,
    build,
    s1_geometric,
    s2_impulse_product,
)
from idepcag.errors import ContractionError, NumericalError
from idepcag.oracle import (
    PicardConfig,
    PicardSolver,
    difference_step,
    h2_check,
    picard_solve,
)


def plain_ivp(A, B, F=None, impulses=None, h=1.0, beta=0.0, window=(0.0, 3.0), tau=0.0, y0=(1.0,)):
    p = build(UniformGrid(h=h, beta=beta), window)
    system = LinearSystem(A=A, B=B, F=F, impulses=impulses)
    return IVP(system=system, partition=p, tau=tau, y0=list(y0))


def test_scalar_exponential():
    ivp = plain_ivp(MatrixFunction([[0.9]]), MatrixFunction.zero(1))
    got = picard_solve(ivp, 1.0)
    assert got[0] == pytest.approx(np.exp(0.9), abs=1e-6)


def test_geometric_example_value():
    sc = s1_geometric(0.9, 1.2, 1.8)
    got = picard_solve(sc.ivp, 2.5)
    assert got[0] == pytest.approx(1.994544, abs=1e-5)


def test_impulse_product_example_value():
    sc = s2_impulse_product(c=-1.1, z0=-1.2)
    got = picard_solve(sc.ivp, 3.2)
    assert got[0] == pytest.approx(1.5972, abs=1e-5)


def test_solver_caches_across_queries():
    sc = s1_geometric(0.8, 1.1, 1.0)
    solver = PicardSolver(sc.ivp)
    a = solver.solve(2.5)
    b = solver.solve(2.5)
    assert np.array_equal(a, b)
    # node queries return the post-impulse state
    node_val = solver.solve(2.0)
    assert node_val[0] == pytest.approx((0.8 * 1.1) ** 2, abs=1e-6)
    left = solver.left_limit(2.0)
    assert node_val[0] == pytest.approx(1.1 * left[0], abs=1e-8)


def test_contraction_gate():
    # int of ||A|| + ||B|| over a unit interval is 2 ln 2 > 1
    ivp = plain_ivp(MatrixFunction([["1/(t+1)"]]), MatrixFunction([["-(1/(t+1))"]]))
    with pytest.raises(ContractionError):
        picard_solve(ivp, 0.5)


def test_nonconvergence_reported():
    ivp = plain_ivp(MatrixFunction([[0.9]]), MatrixFunction.zero(1))
    with pytest.raises(NumericalError):
        picard_solve(ivp, 1.5, PicardConfig(max_iterations=2))


def test_config_validation():
    with pytest.raises(ValueError):
        PicardConfig(tolerance=1.0)
    with pytest.raises(ValueError):
        PicardConfig(grid_points_per_interval=2)
    with pytest.raises(ValueError):
        PicardConfig(max_iterations=0)


def test_h2_zero_system():
    ivp = plain_ivp(MatrixFunction.zero(1), MatrixFunction.zero(1))
    report = h2_check(ivp)
    assert report.passed
    assert report.nu_bar == 0.0


def test_h2_constant_scalar():
    a, b, h = 0.3, 0.25, 0.8
    ivp = plain_ivp(MatrixFunction([[a]]), MatrixFunction([[b]]), h=h, window=(0.0, 2.4))
    report = h2_check(ivp)
    assert report.nu_bar == pytest.approx((a + b) * h, rel=1e-6)
    assert report.passed


def test_h2_sine_scenario():
    ivp = plain_ivp(
        MatrixFunction.zero(1),
        MatrixFunction([["sin(2*pi*t)"]]),
        h=0.2,
        beta=0.2,
        window=(0.0, 1.0),
    )
    report = h2_check(ivp)
    assert report.passed
    assert report.nu_bar <= 0.2
    assert "nu_bar" in report.to_dict()


def test_refinement_is_second_order():
    # halving the grid step cuts the change by about four
    ivp = plain_ivp(
        MatrixFunction([["0.4*sin(t)"]]),
        MatrixFunction([["0.3*cos(t)"]]),
        F=VectorFunction(["0.5"]),
        beta=0.5,
        impulses=ImpulseSequence.constant(C=[[0.2]], D=[0.1], n=1),
    )
    t = 2.7
    vals = {
        m: picard_solve(ivp, t, PicardConfig(grid_points_per_interval=m))[0]
        for m in (256, 512, 1024)
    }
    d_coarse = abs(vals[256] - vals[512])
    d_fine = abs(vals[512] - vals[1024])
    assert d_coarse <= 6.0 * max(d_fine, 1e-14)
    assert d_fine < 5e-6


def test_difference_step_geometric():
    out = difference_step(lambda k: 1.08, lambda k: 0.0, [1.8], 5)
    assert out[-1][0] == pytest.approx(1.08**5 * 1.8, rel=1e-12)


def test_difference_step_partial_sums():
    D = [1.0 / (k + 1) ** 2 for k in range(10)]
    out = difference_step(lambda k: np.eye(1), lambda k: [D[k]], [0.0], 10)
    assert out[-1][0] == pytest.approx(sum(D), rel=1e-14)


def test_difference_step_dimension_mismatch():
    with pytest.raises(ValueError):
        difference_step(lambda k: np.eye(2), lambda k: [1.0], [0.0, 0.0], 3)
