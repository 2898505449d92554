"""Fundamental matrices and variation-of-parameters solutions for linear
impulsive differential equations with piecewise constant arguments of
generalized type.

The continuous flow x' = A(t) x(t) + B(t) x(gamma(t)) + F(t) runs between
partition nodes t_k, where the state jumps by y(t_k) = (I + C_k) y(t_k^-)
+ D_k; the deviating argument gamma is constant on each interval, taking
the value of an anchor that may lie ahead of or behind t.
"""

from ._backend import backend_name
from .bounds import GronwallData, gronwall1_bound, gronwall2_bound, h1_constants
from .closedforms import (
    ConstantSystem,
    e_tilde,
    solve_advanced,
    solve_b_only,
    solve_constant,
    solve_delayed,
)
from .coeffs import (
    ImpulseSequence,
    MatrixFunction,
    VectorFunction,
    eval_matrix,
    impulse_at,
    parse,
)
from .fundamental import FundamentalEngine, solve_homogeneous, w_global, w_local
from .grid import (
    ChiuGrid,
    ExplicitGrid,
    Partition,
    UniformGrid,
    build,
    gamma,
    locate,
    split,
)
from .kernel import H3Report, KernelEngine, check_h3, e_inverse, e_matrix, j_matrix
from .oracle import (
    H2Report,
    PicardConfig,
    PicardSolver,
    difference_step,
    h2_check,
    picard_solve,
)
from .scenarios import (
    Scenario,
    classify_s1,
    s1_geometric,
    s2_impulse_product,
    s3_cooke_yorke,
    s4_sine_idepca,
)
from .transition import TransitionEngine, phi, rho_diagnostics
from .vop import (
    IVP,
    LinearSystem,
    NumericsConfig,
    Trajectory,
    VopSolver,
    discrete_solution,
    green_kernel,
    sample_trajectory,
    solve,
    solve_via_green,
)

__version__ = "0.1.0"
