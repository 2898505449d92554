"""A-priori Gronwall-Bellman envelopes for the impulsive hybrid system.

Two inequality families are implemented.  Both bound a nonnegative u
satisfying

    u(t) <= u(tau) + int_tau^t (eta1 u + eta2 u(gamma)) + sum eta(t_k) u(t_k^-)

by an impulse product times an exponential of integrated coefficients;
they differ in the smallness condition required on the advanced parts:

* the first needs theta_hat = sup_k int_{t_k}^{zeta_k} (eta1 + eta2) < 1;
* the second needs varrho = sup_k int_{t_k}^{zeta_k} eta2 e^{int_s^{zeta_k} eta1} < 1.

For the linear system the natural data is eta1 = ||A(.)||,
eta2 = ||B(.)||, eta(t_k) = ||C_k||  (see :func:`h1_constants`), and a
homogeneous solution's norm is dominated by either bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._quad import composite_grid, gl_rule
from .errors import HypothesisError
from .expr import Expression
from .grid import Partition, locate

__all__ = [
    "GronwallData",
    "Gronwall1Bound",
    "gronwall1_bound",
    "gronwall2_bound",
    "anchor_value_bound",
    "H1Data",
    "h1_constants",
]

_PANELS = 8
_ORDER = 16


class _ScalarField:
    """Nonnegative scalar function of t: an Expression, a callable, a
    constant, or anything exposing a batched ``eval_many``."""

    def __init__(self, obj):
        self._expr = None
        self._fn = None
        self._batch = None
        if isinstance(obj, Expression):
            self._expr = obj
        elif hasattr(obj, "eval_many"):
            self._batch = obj.eval_many
        elif callable(obj):
            self._fn = obj
        else:
            value = float(obj)
            self._fn = lambda _t, _v=value: _v

    def eval_many(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        if self._expr is not None:
            return np.broadcast_to(np.asarray(self._expr.eval(t=ts), dtype=float), ts.shape)
        if self._batch is not None:
            return np.asarray(self._batch(ts), dtype=float)
        return np.array([float(self._fn(x)) for x in ts])


class MatrixNormField:
    """t -> ||M(t)|| (operator 2-norm), with batched evaluation."""

    def __init__(self, mf):
        self._mf = mf

    def __call__(self, t: float) -> float:
        return float(np.linalg.norm(self._mf.eval(float(t)), 2))

    def eval_many(self, ts) -> np.ndarray:
        return np.linalg.svd(self._mf.eval_many(ts), compute_uv=False)[..., 0]


def _integrate(f: _ScalarField, a: float, b: float) -> float:
    if a == b:
        return 0.0
    nodes, weights = composite_grid(min(a, b), max(a, b), _PANELS, _ORDER)
    val = float(weights @ f.eval_many(nodes))
    return val if b > a else -val


def _integrate_split(f: _ScalarField, a: float, b: float, cuts: np.ndarray) -> float:
    """Integral of f over [a, b] with panels split at the given cut points."""
    pts = [a] + [float(c) for c in cuts if a < c < b] + [b]
    return sum(_integrate(f, pts[i], pts[i + 1]) for i in range(len(pts) - 1))


@dataclass
class GronwallData:
    """Scalar inequality data on a partition window.

    ``eta1``/``eta2`` are expressions in t or callables; ``eta`` maps a
    node index to the impulse weight (callable or dict, default 0); ``tau``
    is the left endpoint of the comparison and ``t`` an optional default
    evaluation time (the bound operations accept an override).
    """

    eta1: object
    eta2: object
    eta: object
    partition: Partition
    tau: float
    t: float | None = None
    _f1: _ScalarField = field(init=False, repr=False)
    _f2: _ScalarField = field(init=False, repr=False)

    def __post_init__(self):
        self.tau = float(self.tau)
        self._f1 = _ScalarField(self.eta1)
        self._f2 = _ScalarField(self.eta2)
        self._theta = None
        self._varrho = None
        self._interval_cache = {}

    def eta_at(self, k: int) -> float:
        if self.eta is None:
            return 0.0
        if callable(self.eta):
            return float(self.eta(k))
        return float(self.eta.get(k, 0.0))

    def theta_hat(self) -> float:
        """sup_k over the window of int_{t_k}^{zeta_k} (eta1 + eta2)."""
        if self._theta is None:
            p = self.partition
            self._theta = max(
                _integrate(self._f1, float(p.nodes[k]), float(p.anchors[k]))
                + _integrate(self._f2, float(p.nodes[k]), float(p.anchors[k]))
                for k in range(p.n_intervals)
            )
        return self._theta

    def varrho(self) -> float:
        """sup_k of int_{t_k}^{zeta_k} eta2(s) exp(int_s^{zeta_k} eta1)."""
        if self._varrho is None:
            p = self.partition
            x, w = gl_rule(_ORDER)
            sup = 0.0
            for k in range(p.n_intervals):
                a, z = float(p.nodes[k]), float(p.anchors[k])
                if z == a:
                    continue
                mid, half = 0.5 * (a + z), 0.5 * (z - a)
                s_nodes = mid + half * x
                inner = np.array([_integrate(self._f1, float(s), z) for s in s_nodes])
                vals = self._f2.eval_many(s_nodes) * np.exp(inner)
                sup = max(sup, float(half * (w @ vals)))
            self._varrho = sup
        return self._varrho

    def interval_term(self, which: str, j: int, payload) -> float:
        """Memoized per-interval integral pieces used by the envelopes."""
        key = (which, j)
        hit = self._interval_cache.get(key)
        if hit is None:
            hit = payload()
            self._interval_cache[key] = hit
        return hit

    def impulse_product(self, t: float) -> float:
        """prod of (1 + eta(t_k)) over nodes with tau <= t_k < t."""
        p = self.partition
        out = 1.0
        for k in range(p.nodes.shape[0]):
            tk = float(p.nodes[k])
            if self.tau <= tk < t:
                out *= 1.0 + self.eta_at(k)
        return out


@dataclass
class Gronwall1Bound:
    at_t: float
    at_gamma: float
    theta_hat: float


def gronwall1_bound(d: GronwallData, u_tau: float, t: float | None = None) -> Gronwall1Bound:
    """First envelope: impulse product times exp(int (eta1 + eta2/(1-theta_hat))).

    Also returns the bound on u(gamma(t)), which carries the extra
    (1-theta_hat)^-1 prefactor.  Requires theta_hat < 1.
    """
    t = float(d.t if t is None else t)
    theta = d.theta_hat()
    if theta >= 1.0:
        raise HypothesisError(f"first envelope needs theta_hat < 1, got {theta:.4f}")
    grow = _integrate_split(d._f1, d.tau, t, d.partition.nodes) + _integrate_split(
        d._f2, d.tau, t, d.partition.nodes
    ) / (1.0 - theta)
    base = d.impulse_product(t) * np.exp(grow) * float(u_tau)
    return Gronwall1Bound(at_t=base, at_gamma=base / (1.0 - theta), theta_hat=theta)


def anchor_value_bound(d: GronwallData, k: int, u_tk: float, reading: str = "inverse") -> float:
    """Bound on u(zeta_k) in terms of u(t_k).

    The inequality is stated with a (1 - theta) factor whose direction is
    suspect; the default ``"inverse"`` reading uses (1 - theta_hat)^-1
    (consistent with the gamma(t) bound), ``"literal"`` uses the factor as
    written.
    """
    theta = d.theta_hat()
    if theta >= 1.0:
        raise HypothesisError(f"anchor bound needs theta_hat < 1, got {theta:.4f}")
    if reading == "inverse":
        return float(u_tk) / (1.0 - theta)
    if reading == "literal":
        return float(u_tk) * (1.0 - theta)
    raise ValueError(f"unknown reading {reading!r}")


def gronwall2_bound(d: GronwallData, u_tau: float, t: float | None = None) -> float:
    """Second envelope, with per-interval exp-weighted eta2 masses.

    Requires varrho < 1; the (1 - varrho)^-1 factor multiplies the eta2
    terms and the plain int eta1 is added on top.
    """
    t = float(d.t if t is None else t)
    rho = d.varrho()
    if rho >= 1.0:
        raise HypothesisError(f"second envelope needs varrho < 1, got {rho:.4f}")
    p = d.partition
    ktau = locate(p, d.tau)
    kt = locate(p, t)
    acc = 0.0
    for j in range(ktau + 1, kt + 1):
        a, b = float(p.nodes[j - 1]), float(p.nodes[j])
        weight = d.interval_term(
            "w", j - 1, lambda: np.exp(_integrate(d._f1, a, float(p.anchors[j - 1])))
        )
        acc += weight * d.interval_term("m", j - 1, lambda: _integrate(d._f2, a, b))
    tk = float(p.nodes[kt])
    tail_weight = d.interval_term(
        "w", kt, lambda: np.exp(_integrate(d._f1, tk, float(p.anchors[kt])))
    )
    acc += tail_weight * _integrate(d._f2, tk, t)
    grow = acc / (1.0 - rho) + _integrate_split(d._f1, d.tau, t, p.nodes)
    return d.impulse_product(t) * float(np.exp(grow)) * float(u_tau)


@dataclass
class H1Data:
    """Lipschitz data of the linear system: coefficient norms and jump sizes."""

    eta1: object  # t -> ||A(t)||
    eta2: object  # t -> ||B(t)||
    lambda_k: object  # k -> ||C_k||
    d_offset: object  # k -> ||D_k||


def h1_constants(system) -> H1Data:
    """eta1 = ||A(.)||, eta2 = ||B(.)||, lambda_k = ||C_k||, plus ||D_k||."""
    imp = system.impulses
    return H1Data(
        eta1=MatrixNormField(system.A),
        eta2=MatrixNormField(system.B),
        lambda_k=lambda k: float(np.linalg.norm(imp.c_at(k), 2)),
        d_offset=lambda k: float(np.linalg.norm(imp.d_at(k))),
    )
