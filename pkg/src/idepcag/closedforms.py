"""Special-case solution formulas used as independent cross-validation paths.

Each function re-derives the solution from the structure available in its
special case rather than delegating to the generic solver:

* fully delayed grids (every anchor at the left node) and fully advanced
  grids (every anchor at the right node) admit pure E-product fundamental
  matrices;
* B-only systems (A = 0) have Phi = I, so the kernel collapses to
  J(t, s) = I + int_s^t B(u) du and W is a product of J factors;
* constant-coefficient systems have the closed kernel
  Etilde(t) = e^{At} (I + A^{-1} (I - e^{-At}) B), and on uniform interval
  geometry the interior product telescopes into integer powers of a single
  matrix Ehat.

On their domains of validity these must agree with the generic
variation-of-parameters path; that agreement is the module's test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from ._quad import composite_grid, panels_for
from .coeffs import MatrixFunction
from .errors import GridError, NumericalError, SingularMatrixError
from .grid import Partition
from .kernel import KernelEngine
from .transition import TransitionEngine
from .vop import IVP, NumericsConfig

__all__ = [
    "ConstantSystem",
    "e_tilde",
    "solve_constant",
    "solve_delayed",
    "solve_advanced",
    "solve_b_only",
]

_COND_LIMIT = 1e12


@dataclass
class ConstantSystem:
    """Constant A (invertible), B, jump matrix C, and interval geometry."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    partition: Partition

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        self.C = np.atleast_2d(np.asarray(self.C, dtype=float))
        n = self.A.shape[0]
        if self.A.shape != (n, n) or self.B.shape != (n, n) or self.C.shape != (n, n):
            raise ValueError("A, B, C must be square matrices of equal size")
        s = np.linalg.svd(self.A, compute_uv=False)
        if s[-1] == 0.0 or s[0] / s[-1] > _COND_LIMIT:
            raise SingularMatrixError("constant-coefficient path needs invertible A")
        self._A_inv = np.linalg.solve(self.A, np.eye(n))
        self._et_cache: dict = {}
        self._eti_cache: dict = {}

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def eta_plus(self, k: int) -> float:
        return float(self.partition.anchors[k] - self.partition.nodes[k])

    def eta_minus(self, k: int) -> float:
        return float(self.partition.nodes[k + 1] - self.partition.anchors[k])

    def e_tilde(self, t: float) -> np.ndarray:
        t = float(t)
        hit = self._et_cache.get(t)
        if hit is None:
            hit = expm(self.A * t) @ (
                np.eye(self.n) + self._A_inv @ (np.eye(self.n) - expm(-self.A * t)) @ self.B
            )
            self._et_cache[t] = hit
        return hit

    def e_tilde_inv(self, t: float) -> np.ndarray:
        t = float(t)
        hit = self._eti_cache.get(t)
        if hit is None:
            E = self.e_tilde(t)
            try:
                hit = np.linalg.solve(E, np.eye(self.n))
            except np.linalg.LinAlgError as err:
                raise SingularMatrixError(
                    f"Etilde({t}) is singular; kernel invertibility fails"
                ) from err
            self._eti_cache[t] = hit
        return hit


def e_tilde(cs: ConstantSystem, t: float) -> np.ndarray:
    """Etilde(t) = e^{At} (I + A^-1 (I - e^{-At}) B)."""
    return cs.e_tilde(t)


def _solve_indices(p: Partition, tau: float, t: float):
    """Node-aware indices (right-continuous at nodes) plus the effective
    initial anchor, mirroring the generic solver's conventions."""

    def idx(x):
        j = p.node_index_of(float(x))
        if j is not None:
            return j
        from .grid import locate

        return locate(p, x)

    ktau, kt = idx(tau), idx(t)
    zhat = max(float(p.anchors[ktau]), float(tau))
    return ktau, kt, zhat


def _mat_pow(M: np.ndarray, k: int) -> np.ndarray:
    """Integer power by repeated multiplication (windows are small)."""
    out = np.eye(M.shape[0])
    for _ in range(k):
        out = M @ out
    return out


def solve_constant(cs: ConstantSystem, ivp: IVP, t: float, path: str = "product") -> np.ndarray:
    """Constant-coefficient solution via the Etilde kernel.

    ``path="product"`` evaluates the general-geometry product form;
    ``path="power"`` uses integer powers of Ehat = (I+C) Etilde(eta-)
    Etilde^-1(-eta+), which requires the interval geometry to be uniform.
    """
    if path not in ("product", "power"):
        raise ValueError(f"unknown path {path!r}")
    p = cs.partition
    t, tau = float(t), float(ivp.tau)
    if t < tau:
        raise GridError("forward solving only (tau <= t)")
    if t == tau:
        return ivp.y0.copy()
    n = cs.n
    ktau, kt, zhat = _solve_indices(p, tau, t)
    nodes, anchors = p.nodes, p.anchors
    jump = np.eye(n) + cs.C

    def w_loc(x, s, anchor):
        # W(x, s) = Etilde(x - anchor) Etilde^-1(s - anchor)
        if x == s:
            return np.eye(n)
        out = cs.e_tilde(x - anchor)
        if s != anchor:
            out = out @ cs.e_tilde_inv(s - anchor)
        return out

    at_node = p.node_index_of(t) == kt

    # suffix products P[r] = W(t, t_r), r in (ktau, kt]
    P: dict = {}
    if kt > ktau:
        if at_node:
            cur = np.eye(n)
        else:
            cur = w_loc(t, float(nodes[kt]), float(anchors[kt]))
        P[kt] = cur
        if path == "power" and kt - ktau >= 2:
            etas_p = {round(cs.eta_plus(k), 12) for k in range(ktau, kt)}
            etas_m = {round(cs.eta_minus(k), 12) for k in range(ktau, kt)}
            if len(etas_p) > 1 or len(etas_m) > 1:
                raise GridError("power path needs uniform interval geometry")
            eta_p, eta_m = cs.eta_plus(ktau), cs.eta_minus(ktau)
            e_hat = jump @ cs.e_tilde(eta_m) @ cs.e_tilde_inv(-eta_p)
            for r in range(kt - 1, ktau, -1):
                P[r] = P[kt] @ _mat_pow(e_hat, kt - r)
        else:
            for r in range(kt - 1, ktau, -1):
                w_int = w_loc(float(nodes[r + 1]), float(nodes[r]), float(anchors[r]))
                cur = cur @ jump @ w_int
                P[r] = cur

    if kt == ktau:
        W_tau = w_loc(t, tau, zhat)
    else:
        W_tau = P[ktau + 1] @ jump @ w_loc(float(nodes[ktau + 1]), tau, zhat)

    def phi_integral(base, a, b):
        # oriented int_a^b e^{A(base - s)} f(s) ds
        if a == b or not ivp.system.has_forcing():
            return np.zeros(n)
        lo, hi = (a, b) if a < b else (b, a)
        sign = 1.0 if b > a else -1.0
        qnodes, weights = composite_grid(lo, hi, panels_for(hi - lo, 128), 16)
        fs = ivp.system.F.eval_many(qnodes)
        acc = np.zeros(n)
        for q in range(qnodes.shape[0]):
            acc += weights[q] * (expm(cs.A * (base - qnodes[q])) @ fs[q])
        return sign * acc

    y = W_tau @ (ivp.y0 + phi_integral(tau, tau, zhat))
    if ivp.system.has_forcing():
        adv_top = kt - 1 if at_node else kt
        for r in range(ktau + 1, adv_top + 1):
            tr, zr = float(nodes[r]), float(anchors[r])
            y = y + P[r] @ phi_integral(tr, tr, zr)
        for r in range(ktau, kt):
            start = zhat if r == ktau else float(anchors[r])
            tr1 = float(nodes[r + 1])
            y = y + P[r + 1] @ (jump @ phi_integral(tr1, start, tr1))
        if not at_node:
            anchor = zhat if kt == ktau else float(anchors[kt])
            y = y + phi_integral(t, anchor, t)
    imp = ivp.system.impulses
    if not imp.is_identity():
        for r in range(ktau + 1, kt + 1):
            d = imp.d_at(r)
            if np.any(d):
                y = y + P[r] @ d
    return y


def _engines_for(ivp: IVP, numerics: NumericsConfig | None):
    cached = getattr(ivp, "_closedform_engines", None)
    if cached is not None:
        return cached
    num = numerics or NumericsConfig()
    tr = TransitionEngine(ivp.system.A, steps_per_unit=num.steps_per_unit)
    ke = KernelEngine(tr, ivp.system.B, quad_order=num.quad_order)
    ivp._closedform_engines = (tr, ke, num)
    return tr, ke, num


def _phi_weighted(tr: TransitionEngine, F, num: NumericsConfig, base, a, b, n):
    if a == b or F is None:
        return np.zeros(n)
    lo, hi = (a, b) if a < b else (b, a)
    sign = 1.0 if b > a else -1.0
    qnodes, weights = composite_grid(lo, hi, panels_for(hi - lo, num.steps_per_unit), num.quad_order)
    phis = tr.phi_from(base, qnodes)
    fs = F.eval_many(qnodes)
    return sign * np.einsum("q,qij,qj->i", weights, phis, fs)


def solve_delayed(ivp: IVP, t: float, numerics: NumericsConfig | None = None) -> np.ndarray:
    """Solution on a fully delayed grid (every anchor at the left node).

    The fundamental matrix collapses to a product of E(t_{j+1}, t_j)
    factors and the forcing enters through delayed-part integrals only.
    """
    p = ivp.partition
    if np.any(p.anchors != p.nodes[:-1]):
        raise GridError("delayed path needs zeta_k = t_k on every interval")
    tr, ke, num = _engines_for(ivp, numerics)
    t, tau = float(t), float(ivp.tau)
    if t < tau:
        raise GridError("forward solving only (tau <= t)")
    if t == tau:
        return ivp.y0.copy()
    n = ivp.n
    ktau, kt, _ = _solve_indices(p, tau, t)
    nodes = p.nodes
    imp = ivp.system.impulses
    F = ivp.system.F if ivp.system.has_forcing() else None
    at_node = p.node_index_of(t) == kt

    # suffix products of E factors: P[r] = W_-(t, t_r)
    P: dict = {}
    if kt > ktau:
        cur = np.eye(n) if at_node else ke.e_matrix(t, float(nodes[kt]))
        P[kt] = cur
        for r in range(kt - 1, ktau, -1):
            cur = cur @ imp.jump_factor(r + 1) @ ke.e_matrix(float(nodes[r + 1]), float(nodes[r]))
            P[r] = cur
        W_tau = P[ktau + 1] @ imp.jump_factor(ktau + 1) @ ke.e_matrix(float(nodes[ktau + 1]), tau)
    else:
        W_tau = ke.e_matrix(t, tau)

    y = W_tau @ ivp.y0
    if F is not None:
        for r in range(ktau, kt):
            start = tau if r == ktau else float(nodes[r])
            tr1 = float(nodes[r + 1])
            piece = _phi_weighted(tr, F, num, tr1, start, tr1, n)
            y = y + P[r + 1] @ (imp.jump_factor(r + 1) @ piece)
        if not at_node:
            base = tau if kt == ktau else float(nodes[kt])
            y = y + _phi_weighted(tr, F, num, t, base, t, n)
    if not imp.is_identity():
        for r in range(ktau + 1, kt + 1):
            d = imp.d_at(r)
            if np.any(d):
                y = y + P[r] @ d
    return y


def solve_advanced(ivp: IVP, t: float, numerics: NumericsConfig | None = None) -> np.ndarray:
    """Solution on a fully advanced grid (every anchor at the right node).

    The fundamental matrix is built from E^-1(t_j, t_{j+1}) factors and the
    terminal forcing term is the backward integral -int_t^{t_{k(t)+1}}.
    """
    p = ivp.partition
    if np.any(p.anchors != p.nodes[1:]):
        raise GridError("advanced path needs zeta_k = t_{k+1} on every interval")
    tr, ke, num = _engines_for(ivp, numerics)
    t, tau = float(t), float(ivp.tau)
    if t < tau:
        raise GridError("forward solving only (tau <= t)")
    if t == tau:
        return ivp.y0.copy()
    n = ivp.n
    ktau, kt, _ = _solve_indices(p, tau, t)
    nodes = p.nodes
    imp = ivp.system.impulses
    F = ivp.system.F if ivp.system.has_forcing() else None
    at_node = p.node_index_of(t) == kt

    def e_inv(x, anchor):
        return ke.e_inverse(x, anchor)

    P: dict = {}
    if kt > ktau:
        if at_node:
            cur = np.eye(n)
        else:
            cur = ke.e_matrix(t, float(nodes[kt + 1])) @ e_inv(float(nodes[kt]), float(nodes[kt + 1]))
        P[kt] = cur
        for r in range(kt - 1, ktau, -1):
            cur = cur @ imp.jump_factor(r + 1) @ e_inv(float(nodes[r]), float(nodes[r + 1]))
            P[r] = cur
        W_tau = P[ktau + 1] @ imp.jump_factor(ktau + 1) @ e_inv(tau, float(nodes[ktau + 1]))
    else:
        W_tau = ke.e_matrix(t, float(nodes[kt + 1])) @ e_inv(tau, float(nodes[kt + 1]))

    y = W_tau @ ivp.y0
    if F is not None:
        y = y + W_tau @ _phi_weighted(tr, F, num, tau, tau, float(nodes[ktau + 1]), n)
        adv_top = kt - 1 if at_node else kt
        for r in range(ktau + 1, adv_top + 1):
            trr, tr1 = float(nodes[r]), float(nodes[r + 1])
            y = y + P[r] @ _phi_weighted(tr, F, num, trr, trr, tr1, n)
        if not at_node:
            # terminal advanced term: -int_t^{t_{k(t)+1}}
            y = y + _phi_weighted(tr, F, num, t, float(nodes[kt + 1]), t, n)
    if not imp.is_identity():
        for r in range(ktau + 1, kt + 1):
            d = imp.d_at(r)
            if np.any(d):
                y = y + P[r] @ d
    return y


def solve_b_only(ivp: IVP, t: float, quad_order: int = 16) -> np.ndarray:
    """Homogeneous solution when A = 0: Phi = I and E = J = I + int B.

    The fundamental matrix is the pure J-factor product; forcing or D
    impulses are outside this formula and are rejected.
    """
    sys_ = ivp.system
    if not sys_.A.is_zero():
        raise GridError("B-only path needs A identically zero")
    if sys_.has_forcing():
        raise ValueError("B-only path is homogeneous; got nonzero forcing")
    imp = sys_.impulses
    if imp.d_expr is not None or imp.d_items:
        raise ValueError("B-only path is homogeneous; got D impulses")
    p = ivp.partition
    t, tau = float(t), float(ivp.tau)
    if t < tau:
        raise GridError("forward solving only (tau <= t)")
    if t == tau:
        return ivp.y0.copy()
    n = ivp.n
    ktau, kt, zhat = _solve_indices(p, tau, t)
    nodes, anchors = p.nodes, p.anchors

    def j_mat(x, s):
        # J(x, s) = I + int_s^x B(u) du, by direct quadrature of B
        if x == s:
            return np.eye(n)
        lo, hi = (s, x) if s < x else (x, s)
        sign = 1.0 if x > s else -1.0
        qnodes, weights = composite_grid(lo, hi, panels_for(hi - lo, 128), quad_order)
        bs = sys_.B.eval_many(qnodes)
        return np.eye(n) + sign * np.einsum("q,qij->ij", weights, bs)

    def j_inv(x, s):
        J = j_mat(x, s)
        try:
            inv = np.linalg.solve(J, np.eye(n))
        except np.linalg.LinAlgError as err:
            raise SingularMatrixError(f"J({x}, {s}) is singular") from err
        if not np.all(np.isfinite(inv)):
            raise NumericalError(f"J({x}, {s}) inversion produced non-finite entries")
        return inv

    at_node = p.node_index_of(t) == kt
    if kt == ktau:
        W = j_mat(t, zhat) if zhat == tau else j_mat(t, zhat) @ j_inv(tau, zhat)
    else:
        W = imp.jump_factor(ktau + 1) @ j_mat(float(nodes[ktau + 1]), zhat)
        if zhat != tau:
            W = W @ j_inv(tau, zhat)
        for j in range(ktau + 1, kt):
            zj = float(anchors[j])
            W = imp.jump_factor(j + 1) @ j_mat(float(nodes[j + 1]), zj) @ j_inv(float(nodes[j]), zj) @ W
        if not at_node:
            zk = float(anchors[kt])
            W = j_mat(t, zk) @ j_inv(float(nodes[kt]), zk) @ W
    return W @ ivp.y0
