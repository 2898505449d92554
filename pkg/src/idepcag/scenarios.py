"""Named scenario builders with closed-form reference solutions.

Each scenario packages a concrete impulsive system as an :class:`IVP`
plus, where one exists, an independent closed-form evaluator used to
cross-check the generic solver:

* ``s1-geometric``: scalar x' = (alpha-1) x([t]) with x(n) = beta x(n^-);
  geometric node dynamics (alpha*beta)^n with a linear ramp in between.
* ``s2-impulse-product``: x' = a(t)(x - x([t])) with multiplicative jumps
  c_k; without impulses every solution is constant, with them the
  solution is the running product of the c_k.
* ``s3-cooke-yorke``: x' = a(t)(x - x(gamma)) + f(t) with additive jumps
  D_k; the fundamental matrix is identically 1, and for f = 0 the
  solution is y0 plus the partial sums of D.
* ``s4-sine``: z' = sin(2 pi t) z([t/h]h + beta h) + 1 with jumps
  z(kh) = -z(kh^-)/2 + 1/2; the reference uses the exact sine
  antiderivative throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import exp1

from .coeffs import ImpulseSequence, MatrixFunction, VectorFunction
from .errors import HypothesisError
from .grid import Partition, UniformGrid, build, locate
from .vop import IVP, LinearSystem

__all__ = [
    "Scenario",
    "S1Classification",
    "s1_geometric",
    "classify_s1",
    "s2_impulse_product",
    "s3_cooke_yorke",
    "s4_sine_idepca",
    "SCENARIO_IDS",
]


@dataclass
class Scenario:
    id: str
    ivp: IVP
    closed_form: object | None = None  # callable t -> ndarray(n,)
    notes: str = ""
    params: dict = field(default_factory=dict)


def _solve_index(p: Partition, t: float) -> int:
    j = p.node_index_of(float(t))
    return j if j is not None else locate(p, t)


def s1_geometric(alpha: float, beta_imp: float, x0: float, window=(0.0, 10.0)) -> Scenario:
    """Scalar system with gamma(t) = [t] and multiplicative impulses.

    Encoded as A = 0, B = alpha - 1, C_k = beta - 1 (so I + C = beta);
    closed form (alpha*beta)^{[t]} (1 + (alpha-1)(t - [t])) x0.
    """
    p = build(UniformGrid(h=1.0), window)
    system = LinearSystem(
        A=MatrixFunction.zero(1),
        B=MatrixFunction.constant([[alpha - 1.0]]),
        impulses=ImpulseSequence.constant(C=[[beta_imp - 1.0]], n=1),
    )
    ivp = IVP(system=system, partition=p, tau=float(window[0]), y0=[x0])

    def closed(t: float) -> np.ndarray:
        k = _solve_index(p, t)
        frac = float(t) - float(p.nodes[k])
        return np.array([(alpha * beta_imp) ** k * (1.0 + (alpha - 1.0) * frac) * x0])

    return Scenario(
        id="s1-geometric",
        ivp=ivp,
        closed_form=closed,
        notes="geometric node recursion with linear in-interval ramp",
        params={"alpha": alpha, "beta": beta_imp, "x0": x0},
    )


@dataclass(frozen=True)
class S1Classification:
    label: str
    oscillatory: bool


def classify_s1(alpha: float, beta_imp: float) -> S1Classification:
    """Long-run behavior label for the s1 family.

    Checked in order: the constant rows (alpha*beta = 0 or alpha = beta
    = 1), then the alpha = 1 piecewise-constant rows, then decay/growth by
    |alpha*beta|.  Sign alternation (alpha*beta < 0) is an orthogonal flag
    and only becomes the label itself on the measure-zero edge
    |alpha*beta| = 1 with alpha != 1, which no row covers; the remaining
    such edge (alpha*beta = 1) keeps node values fixed and is labeled
    constant.
    """
    prod = alpha * beta_imp
    oscillatory = prod < 0
    if prod == 0 or (alpha == 1 and beta_imp == 1):
        label = "constant"
    elif alpha == 1:
        if abs(beta_imp) > 1:
            label = "piecewise-constant-growing"
        elif 0 < beta_imp < 1:
            label = "piecewise-constant-decaying"
        else:
            label = "piecewise-constant"
    elif abs(prod) < 1:
        label = "decays-exponentially"
    elif abs(prod) > 1:
        label = "grows-exponentially"
    else:
        label = "oscillatory" if oscillatory else "constant"
    return S1Classification(label=label, oscillatory=oscillatory)


def s2_impulse_product(
    a_expr: str = "0.4/(t+1)",
    c: float = -1.1,
    z0: float = -1.2,
    window=(0.0, 6.0),
) -> Scenario:
    """x' = a(t)(x(t) - x([t])) with z(k) = c z(k^-).

    The solution is the product of the jump factors alone, independent of
    a(t): z(t) = c^{#nodes in (tau, t]} z0.  The default a keeps the
    contraction and kernel gates comfortably satisfied.
    """
    p = build(UniformGrid(h=1.0), window)
    system = LinearSystem(
        A=MatrixFunction([[a_expr]]),
        B=MatrixFunction([[f"-({a_expr})"]]),
        impulses=ImpulseSequence.constant(C=[[c - 1.0]], n=1),
    )
    ivp = IVP(system=system, partition=p, tau=float(window[0]), y0=[z0])
    tau = float(window[0])
    ktau = _solve_index(p, tau)

    def closed(t: float) -> np.ndarray:
        k = _solve_index(p, t)
        return np.array([c ** (k - ktau) * z0])

    return Scenario(
        id="s2-impulse-product",
        ivp=ivp,
        closed_form=closed,
        notes="solution is the running product of the jump factors",
        params={"a": a_expr, "c": c, "z0": z0},
    )


def s3_cooke_yorke(
    a_expr: str = "1/(t+1)",
    f_expr: str = "0",
    d_expr: str = "1/k^2",
    y0: float = 1.0,
    grid: UniformGrid | None = None,
    window=(0.0, 100.0),
) -> Scenario:
    """x' = a(t)(x - x(gamma)) + f with additive jumps D_k (population
    renewal dynamics with piecewise constant lifetime argument).

    B = -A makes the fundamental matrix identically 1, so for f = 0 the
    solution is y0 + sum of D_r over nodes crossed, whatever the grid.
    """
    if grid is None:
        grid = UniformGrid(h=1.0, beta=0.7)
    p = build(grid, window)
    system = LinearSystem(
        A=MatrixFunction([[a_expr]]),
        B=MatrixFunction([[f"-({a_expr})"]]),
        F=VectorFunction([f_expr]),
        impulses=ImpulseSequence(
            n=1, d_expr=VectorFunction([d_expr]), k_range=(1, None)
        ),
    )
    tau = float(window[0])
    ivp = IVP(system=system, partition=p, tau=tau, y0=[y0])
    imp = system.impulses
    ktau = _solve_index(p, tau)
    zhat = max(float(p.anchors[ktau]), tau)

    closed = None
    if not system.has_forcing():

        def closed(t: float) -> np.ndarray:
            k = _solve_index(p, t)
            total = y0 + sum(float(imp.d_at(r)[0]) for r in range(ktau + 1, k + 1))
            return np.array([total])

    elif a_expr == "1/(t+1)" and f_expr == "exp(-t)":
        # Phi(b, s) = (1+b)/(1+s); int Phi(b,s) e^{-s} ds reduces to the
        # exponential integral: G(x) = e * E1(1+x)
        def G(x):
            return float(np.e * exp1(1.0 + x))

        def piece(base, a, b):
            return (1.0 + base) * (G(a) - G(b))

        def closed(t: float) -> np.ndarray:
            t = float(t)
            k = _solve_index(p, t)
            total = y0 + piece(tau, tau, zhat)
            for r in range(ktau + 1, k + 1):
                tr, zr = float(p.nodes[r]), float(p.anchors[r])
                total += piece(tr, tr, zr)
            for r in range(ktau, k):
                start = zhat if r == ktau else float(p.anchors[r])
                tr1 = float(p.nodes[r + 1])
                total += piece(tr1, start, tr1)
            anchor_t = zhat if k == ktau else float(p.anchors[k])
            if p.node_index_of(t) != k:
                total += piece(t, anchor_t, t)
            else:
                total -= piece(t, t, anchor_t)
            total += sum(float(imp.d_at(r)[0]) for r in range(ktau + 1, k + 1))
            return np.array([total])

    return Scenario(
        id="s3-cooke-yorke",
        ivp=ivp,
        closed_form=closed,
        notes="unit fundamental matrix; f=0 solutions tend to y0 + sum D_r",
        params={"a": a_expr, "f": f_expr, "d": d_expr, "y0": y0},
    )


def s4_sine_idepca(h: float = 0.2, beta: float = 0.2, z0: float = 1.0, window=None) -> Scenario:
    """z' = sin(2 pi t) z([t/h]h + beta h) + 1, z(kh) = -z(kh^-)/2 + 1/2.

    Requires the contraction bounds beta*h < 1 and (1-beta)*h < 1; the
    reference solution uses the exact antiderivative of sin(2 pi t), so no
    quadrature is involved on the closed-form side.
    """
    if not (0.0 <= beta <= 1.0):
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    if beta * h >= 1.0 or (1.0 - beta) * h >= 1.0:
        raise HypothesisError(
            f"kernel contraction bound fails at h={h}, beta={beta}: "
            f"nu+ <= {beta * h:.3g}, nu- <= {(1 - beta) * h:.3g} must both be < 1"
        )
    if window is None:
        window = (0.0, 10.0 * h)
    p = build(UniformGrid(h=h, beta=beta), window)
    system = LinearSystem(
        A=MatrixFunction.zero(1),
        B=MatrixFunction([["sin(2*pi*t)"]]),
        F=VectorFunction(["1"]),
        impulses=ImpulseSequence.constant(C=[[-1.5]], D=[0.5], n=1),
    )
    ivp = IVP(system=system, partition=p, tau=float(window[0]), y0=[z0])

    def S(a, b):
        # exact int_a^b sin(2 pi s) ds
        return (np.cos(2 * np.pi * a) - np.cos(2 * np.pi * b)) / (2 * np.pi)

    def J(x, s):
        return 1.0 + S(s, x)

    nodes, anchors = p.nodes, p.anchors

    def w_between(t, k, r):
        # W(t, t_r) as a product of scalar J-ratios and jump factors
        out = J(t, anchors[k]) / J(nodes[k], anchors[k]) if t != nodes[k] else 1.0
        for j in range(r, k):
            out *= (-0.5) * J(nodes[j + 1], anchors[j]) / J(nodes[j], anchors[j])
        return out

    def closed(t: float) -> np.ndarray:
        t = float(t)
        k = _solve_index(p, t)
        at_node = p.node_index_of(t) == k
        total = w_between(t, k, 0) * (z0 + beta * h)
        top = k - 1 if at_node else k
        for r in range(1, top + 1):
            total += w_between(t, k, r) * beta * h
        for r in range(0, k):
            total += w_between(t, k, r + 1) * (-0.5) * (1.0 - beta) * h
        if not at_node:
            total += t - (nodes[k] + beta * h)
        for r in range(1, k + 1):
            total += w_between(t, k, r) * 0.5
        return np.array([total])

    return Scenario(
        id="s4-sine",
        ivp=ivp,
        closed_form=closed,
        notes="sinusoidal deviated coefficient with halving jumps",
        params={"h": h, "beta": beta, "z0": z0},
    )


SCENARIO_IDS = {
    "s1-geometric": s1_geometric,
    "s2-impulse-product": s2_impulse_product,
    "s3-cooke-yorke": s3_cooke_yorke,
    "s4-sine": s4_sine_idepca,
}
