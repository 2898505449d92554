"""Variation-of-parameters solution of the forced impulsive system.

For y' = A(t) y + B(t) y(gamma(t)) + F(t) with jumps
y(t_k) = (I + C_k) y(t_k^-) + D_k, the solution is

    y(t) = W(t,tau) y(tau)
         + int_tau^{zeta_{k(tau)}} W(t,tau) Phi(tau,s) f(s) ds
         + sum_{r=k(tau)+1}^{k(t)} int_{t_r}^{zeta_r} W(t,t_r) Phi(t_r,s) f(s) ds
         + sum_{r=k(tau)}^{k(t)-1} int_{zeta_r}^{t_{r+1}} W(t,t_{r+1}) (I+C_{r+1}) Phi(t_{r+1},s) f(s) ds
         + int_{zeta_{k(t)}}^{t} Phi(t,s) f(s) ds
         + sum_{r=k(tau)+1}^{k(t)} W(t,t_r) D_r,

with oriented integrals (the final one runs backward when t is still in
the advanced part of its interval) and the initial-interval anchor
replaced by tau when it lies before tau.  An impulse at node t_r
contributes exactly when tau < t_r <= t.  Solutions are right-continuous:
evaluating at a node returns the post-impulse value, and the left limit
is available separately.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._quad import composite_grid, panels_for
from .coeffs import ImpulseSequence, MatrixFunction, VectorFunction
from .errors import DimensionError, GridError, HypothesisError, NumericalError
from .fundamental import FundamentalEngine
from .grid import Partition, locate
from .kernel import KernelEngine
from .transition import TransitionEngine

__all__ = [
    "LinearSystem",
    "IVP",
    "NumericsConfig",
    "VopSolver",
    "Trajectory",
    "solve",
    "discrete_solution",
    "green_kernel",
    "solve_via_green",
    "sample_trajectory",
]


@dataclass
class LinearSystem:
    """Coefficients of one impulsive system: A, B, forcing F, jumps C/D."""

    A: MatrixFunction
    B: MatrixFunction
    F: VectorFunction | None = None
    impulses: ImpulseSequence | None = None

    def __post_init__(self):
        if self.B.n != self.A.n:
            raise DimensionError("A and B must share a dimension")
        if self.F is not None and self.F.n != self.A.n:
            raise DimensionError("F dimension does not match A")
        if self.impulses is None:
            self.impulses = ImpulseSequence.none(self.A.n)
        elif self.impulses.n != self.A.n:
            raise DimensionError("impulse dimension does not match A")

    @property
    def n(self) -> int:
        return self.A.n

    def has_forcing(self) -> bool:
        return self.F is not None and not self.F.is_zero()


@dataclass
class IVP:
    """System + partition + initial data (tau, y0)."""

    system: LinearSystem
    partition: Partition
    tau: float
    y0: np.ndarray

    def __post_init__(self):
        self.tau = float(self.tau)
        self.y0 = np.atleast_1d(np.asarray(self.y0, dtype=float))
        if self.y0.shape != (self.system.n,):
            raise DimensionError(
                f"y0 must have shape ({self.system.n},), got {self.y0.shape}"
            )
        lo, hi = self.partition.window
        if not (lo <= self.tau < hi):
            raise GridError(f"tau={self.tau} not inside window [{lo}, {hi})")

    @property
    def n(self) -> int:
        return self.system.n


@dataclass(frozen=True)
class NumericsConfig:
    steps_per_unit: int = 256
    quad_order: int = 16
    transition_method: str = "auto"
    cond_limit: float = 1e12
    inverse_residual_tol: float = 1e-10


@dataclass
class Trajectory:
    """Sampled solution; node times carry a left-limit row followed by the
    post-impulse row."""

    times: np.ndarray
    values: np.ndarray
    interval_index: np.ndarray
    is_node: np.ndarray
    is_left_limit: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def column_names(self):
        return (
            ["t"]
            + [f"y_{i + 1}" for i in range(self.n)]
            + ["k", "is_node", "is_left_limit"]
        )

    def to_csv(self, stream) -> None:
        """CSV with '.' decimals and 17 significant digits."""
        stream.write(",".join(self.column_names()) + "\n")
        for i in range(self.times.shape[0]):
            cells = [format(self.times[i], ".17g")]
            cells += [format(v, ".17g") for v in self.values[i]]
            cells += [
                str(int(self.interval_index[i])),
                str(int(self.is_node[i])),
                str(int(self.is_left_limit[i])),
            ]
            stream.write(",".join(cells) + "\n")

    def to_json_obj(self) -> dict:
        return {
            "columns": self.column_names(),
            "rows": [
                [float(self.times[i])]
                + [float(v) for v in self.values[i]]
                + [
                    int(self.interval_index[i]),
                    bool(self.is_node[i]),
                    bool(self.is_left_limit[i]),
                ]
                for i in range(self.times.shape[0])
            ],
        }


class VopSolver:
    """Evaluator for one IVP; caches per-interval kernels and integrals.

    Reentrant: repeated queries share the transition/kernel memo tables.
    """

    def __init__(self, ivp: IVP, numerics: NumericsConfig | None = None):
        self.ivp = ivp
        num = numerics or NumericsConfig()
        self.numerics = num
        sys_ = ivp.system
        self.transition = TransitionEngine(
            sys_.A, steps_per_unit=num.steps_per_unit, method=num.transition_method
        )
        self.kernel = KernelEngine(
            self.transition,
            sys_.B,
            quad_order=num.quad_order,
            cond_limit=num.cond_limit,
            inverse_residual_tol=num.inverse_residual_tol,
        )
        self.fundamental = FundamentalEngine(self.kernel, ivp.partition, sys_.impulses)
        self.partition = ivp.partition
        self.tau = ivp.tau
        self.ktau = self.fundamental.solve_index(self.tau)
        self.zhat = self.fundamental.effective_anchor(self.ktau, self.tau)
        self._h3_report = None
        self._w_first = None
        self._first_adv = None
        self._adv: dict = {}
        self._del: dict = {}

    # -- hypothesis gate -----------------------------------------------------

    def h3_report(self):
        if self._h3_report is None:
            self._h3_report = self.kernel.check_h3(self.partition)
        return self._h3_report

    def _gate(self, force: bool):
        if force:
            return
        report = self.h3_report()
        if not report.passed:
            raise HypothesisError(
                "kernel-invertibility hypothesis fails on intervals "
                f"{report.failing_intervals} (nu+ sup {report.nu_plus_sup:.3g}, "
                f"nu- sup {report.nu_minus_sup:.3g}); pass force=True to override"
            )

    # -- cached pieces ---------------------------------------------------------

    def w_first(self) -> np.ndarray:
        if self._w_first is None:
            self._w_first = self.fundamental.w_first(self.tau)
        return self._w_first

    def _phi_weighted_integral(self, base: float, a: float, b: float) -> np.ndarray:
        """Oriented int_a^b Phi(base, s) f(s) ds by composite Gauss-Legendre."""
        if a == b:
            return np.zeros(self.ivp.n)
        lo, hi = (a, b) if a < b else (b, a)
        sign = 1.0 if b > a else -1.0
        nodes, weights = composite_grid(
            lo, hi, panels_for(hi - lo, self.numerics.steps_per_unit), self.numerics.quad_order
        )
        phis = self.transition.phi_from(base, nodes)
        fs = self.ivp.system.F.eval_many(nodes)
        return sign * np.einsum("q,qij,qj->i", weights, phis, fs)

    def first_adv(self) -> np.ndarray:
        """int_tau^{zhat} Phi(tau, s) f(s) ds (zero when the anchor was
        replaced by tau)."""
        if self._first_adv is None:
            if self.ivp.system.has_forcing():
                self._first_adv = self._phi_weighted_integral(self.tau, self.tau, self.zhat)
            else:
                self._first_adv = np.zeros(self.ivp.n)
        return self._first_adv

    def adv(self, r: int) -> np.ndarray:
        """int_{t_r}^{zeta_r} Phi(t_r, s) f(s) ds."""
        hit = self._adv.get(r)
        if hit is None:
            tr = float(self.partition.nodes[r])
            zr = float(self.partition.anchors[r])
            hit = self._phi_weighted_integral(tr, tr, zr)
            self._adv[r] = hit
        return hit

    def delayed(self, r: int) -> np.ndarray:
        """int_{zeta_r}^{t_{r+1}} Phi(t_{r+1}, s) f(s) ds, starting at tau's
        replacement anchor on the initial interval."""
        hit = self._del.get(r)
        if hit is None:
            start = self.zhat if r == self.ktau else float(self.partition.anchors[r])
            tr1 = float(self.partition.nodes[r + 1])
            hit = self._phi_weighted_integral(tr1, start, tr1)
            self._del[r] = hit
        return hit

    def _w_tau(self, t: float, kt: int, P: dict) -> np.ndarray:
        if kt == self.ktau:
            return self.fundamental._w_local_anchor(t, self.tau, self.zhat)
        return P[self.ktau + 1] @ self.fundamental.jump(self.ktau + 1) @ self.w_first()

    # -- evaluation --------------------------------------------------------------

    def _check_time(self, t: float) -> float:
        t = float(t)
        hi = self.partition.window[1]
        if not (self.tau <= t <= hi):
            raise GridError(f"t={t} outside the solvable range [{self.tau}, {hi}]")
        return t

    def _value_at(self, t: float, kt: int) -> np.ndarray:
        sys_ = self.ivp.system
        fund = self.fundamental
        ktau = self.ktau
        at_node = self.partition.node_index_of(t) == kt
        P = fund.w_suffix_products(t, ktau, kt=kt)
        y = self._w_tau(t, kt, P) @ (self.ivp.y0 + self.first_adv())
        if sys_.has_forcing():
            adv_top = kt - 1 if at_node else kt
            for r in range(ktau + 1, adv_top + 1):
                y = y + P[r] @ self.adv(r)
            for r in range(ktau, kt):
                y = y + P[r + 1] @ (fund.jump(r + 1) @ self.delayed(r))
            if not at_node:
                anchor = self.zhat if kt == ktau else float(self.partition.anchors[kt])
                y = y + self._phi_weighted_integral(t, anchor, t)
        if not sys_.impulses.is_identity():
            for r in range(ktau + 1, kt + 1):
                d = sys_.impulses.d_at(r)
                if np.any(d):
                    y = y + P[r] @ d
        if not np.all(np.isfinite(y)):
            raise NumericalError(f"solution blew up at t={t}")
        return y

    def solve(self, t: float, force: bool = False) -> np.ndarray:
        """y(t) for tau <= t <= window end (post-impulse at nodes)."""
        t = self._check_time(t)
        if t == self.tau:
            return self.ivp.y0.copy()
        self._gate(force)
        return self._value_at(t, self.fundamental.solve_index(t))

    def left_limit(self, t: float, force: bool = False) -> np.ndarray:
        """y(t_j^-) at a node t_j > tau, via the previous interval's formula
        evaluated at the closed right endpoint."""
        t = self._check_time(t)
        j = self.partition.node_index_of(t)
        if j is None or t <= self.tau:
            raise GridError(f"left limit only defined at nodes past tau, got t={t}")
        self._gate(force)
        return self._value_at(t, j - 1)

    def discrete_solution(self, up_to: int, force: bool = False) -> np.ndarray:
        """Post-impulse node values by the one-step recursion.

        Row i holds the state at node k(tau)+i; row 0 is the initial state
        at tau (which may be mid-interval).
        """
        if not (self.ktau <= up_to <= self.partition.n_intervals):
            raise GridError(f"node index {up_to} out of range")
        self._gate(force)
        sys_ = self.ivp.system
        fund = self.fundamental
        forced = sys_.has_forcing()
        out = np.empty((up_to - self.ktau + 1, self.ivp.n))
        out[0] = self.ivp.y0
        if up_to == self.ktau:
            return out
        y = fund.jump(self.ktau + 1) @ (self.w_first() @ (self.ivp.y0 + self.first_adv()))
        if forced:
            y = y + fund.jump(self.ktau + 1) @ self.delayed(self.ktau)
        y = y + sys_.impulses.d_at(self.ktau + 1)
        out[1] = y
        for k in range(self.ktau + 1, up_to):
            step = y + self.adv(k) if forced else y
            y = fund.jump(k + 1) @ (fund.w_interval(k) @ step)
            if forced:
                y = y + fund.jump(k + 1) @ self.delayed(k)
            y = y + sys_.impulses.d_at(k + 1)
            out[k - self.ktau + 1] = y
        return out

    # -- Green kernel ----------------------------------------------------------------

    def _green_region(self, t: float, kt: int, s: float):
        """Branch data for the kernel at (t, s): (prefix matrix, phi base)."""
        fund = self.fundamental
        r = min(fund.solve_index(s), kt)
        P = fund.w_suffix_products(t, self.ktau, kt=kt)
        anchor = self.zhat if r == self.ktau else float(self.partition.anchors[r])
        if r == kt and s > anchor:
            # current interval, past the anchor: plain transition kernel
            return np.eye(self.ivp.n), t
        if s <= anchor:
            # advanced part of interval r (the initial one is based at tau)
            if r == self.ktau:
                return self._w_tau(t, kt, P), self.tau
            return P[r], float(self.partition.nodes[r])
        # delayed part of a past interval
        return P[r + 1] @ fund.jump(r + 1), float(self.partition.nodes[r + 1])

    def green_kernel(self, t: float, s: float, force: bool = False) -> np.ndarray:
        """Piecewise kernel W~(t, s) whose integral against the forcing
        yields the particular solution (tau <= s <= t)."""
        t = self._check_time(t)
        s = float(s)
        if not (self.tau <= s <= t):
            raise GridError(f"green kernel needs tau <= s <= t, got s={s}, t={t}")
        self._gate(force)
        if s == t:
            return np.eye(self.ivp.n)
        prefix, base = self._green_region(t, self.fundamental.solve_index(t), s)
        return prefix @ self.transition.phi(base, s)

    def solve_via_green(self, t: float, force: bool = False) -> np.ndarray:
        """y(t) assembled from the Green kernel by piecewise quadrature."""
        t = self._check_time(t)
        if t == self.tau:
            return self.ivp.y0.copy()
        self._gate(force)
        sys_ = self.ivp.system
        fund = self.fundamental
        ktau = self.ktau
        kt = fund.solve_index(t)
        at_node = self.partition.node_index_of(t) == kt
        P = fund.w_suffix_products(t, ktau, kt=kt)
        W_tau = self._w_tau(t, kt, P)
        y = W_tau @ self.ivp.y0
        if sys_.has_forcing():
            pieces = []  # (prefix, base, a, b) with oriented [a, b]
            if self.zhat > self.tau:
                pieces.append((W_tau, self.tau, self.tau, self.zhat))
            for r in range(ktau, kt):
                start = self.zhat if r == ktau else float(self.partition.anchors[r])
                tr1 = float(self.partition.nodes[r + 1])
                if tr1 > start:
                    pieces.append((P[r + 1] @ fund.jump(r + 1), tr1, start, tr1))
            adv_top = kt - 1 if at_node else kt
            for r in range(ktau + 1, adv_top + 1):
                tr = float(self.partition.nodes[r])
                zr = float(self.partition.anchors[r])
                if zr > tr:
                    pieces.append((P[r], tr, tr, zr))
            if not at_node:
                anchor = self.zhat if kt == ktau else float(self.partition.anchors[kt])
                if anchor != t:
                    pieces.append((np.eye(self.ivp.n), t, anchor, t))
            for prefix, base, a, b in pieces:
                y = y + self._green_piece(prefix, base, a, b)
        if not sys_.impulses.is_identity():
            for r in range(ktau + 1, kt + 1):
                d = sys_.impulses.d_at(r)
                if np.any(d):
                    y = y + P[r] @ d
        return y

    def _green_piece(self, prefix, base, a, b) -> np.ndarray:
        """Oriented int_a^b prefix Phi(base, s) f(s) ds, kernel applied
        pointwise at the quadrature nodes."""
        lo, hi = (a, b) if a < b else (b, a)
        sign = 1.0 if b > a else -1.0
        nodes, weights = composite_grid(
            lo, hi, panels_for(hi - lo, self.numerics.steps_per_unit), self.numerics.quad_order
        )
        phis = self.transition.phi_from(base, nodes)
        fs = self.ivp.system.F.eval_many(nodes)
        kernel_f = np.einsum("ij,qjk,qk->qi", prefix, phis, fs)
        return sign * (weights @ kernel_f)

    # -- sampling ------------------------------------------------------------------

    def sample_trajectory(self, times, force: bool = False) -> Trajectory:
        """Evaluate at sorted times; node times produce a left-limit row and
        a post-impulse row, and the jump identity between them is
        re-verified."""
        times = np.asarray(times, dtype=float)
        if times.ndim != 1 or times.size == 0:
            raise ValueError("times must be a nonempty 1-d array")
        if np.any(np.diff(times) < 0):
            raise ValueError("times must be sorted ascending")
        self._gate(force)
        last_k = self.partition.n_intervals - 1
        rows_t, rows_y, rows_k, rows_node, rows_left = [], [], [], [], []
        for t in times:
            t = self._check_time(t)
            j = self.partition.node_index_of(t)
            if j is not None and t > self.tau:
                y_left = self.left_limit(t, force=True)
                rows_t.append(t)
                rows_y.append(y_left)
                rows_k.append(j - 1)
                rows_node.append(True)
                rows_left.append(True)
                y_post = self._value_at(t, j)
                expected = self.fundamental.jump(j) @ y_left + self.ivp.system.impulses.d_at(j)
                gap = np.linalg.norm(y_post - expected)
                if gap > 1e-8 * (1.0 + np.linalg.norm(y_post)):
                    raise NumericalError(
                        f"jump identity violated at node {j}: residual {gap:.3e}"
                    )
                rows_t.append(t)
                rows_y.append(y_post)
                rows_k.append(min(j, last_k))
                rows_node.append(True)
                rows_left.append(False)
            else:
                y = self.ivp.y0.copy() if t == self.tau else self._value_at(
                    t, self.fundamental.solve_index(t)
                )
                rows_t.append(t)
                rows_y.append(y)
                rows_k.append(locate(self.partition, t))
                rows_node.append(j is not None)
                rows_left.append(False)
        return Trajectory(
            times=np.array(rows_t),
            values=np.array(rows_y),
            interval_index=np.array(rows_k, dtype=int),
            is_node=np.array(rows_node, dtype=bool),
            is_left_limit=np.array(rows_left, dtype=bool),
        )


def _default_solver(ivp: IVP) -> VopSolver:
    solver = getattr(ivp, "_solver", None)
    if solver is None:
        solver = VopSolver(ivp)
        ivp._solver = solver
    return solver


def solve(ivp: IVP, t: float, force: bool = False) -> np.ndarray:
    return _default_solver(ivp).solve(t, force=force)


def discrete_solution(ivp: IVP, up_to: int, force: bool = False) -> np.ndarray:
    return _default_solver(ivp).discrete_solution(up_to, force=force)


def green_kernel(ivp: IVP, t: float, s: float, force: bool = False) -> np.ndarray:
    return _default_solver(ivp).green_kernel(t, s, force=force)


def solve_via_green(ivp: IVP, t: float, force: bool = False) -> np.ndarray:
    return _default_solver(ivp).solve_via_green(t, force=force)


def sample_trajectory(ivp: IVP, times, force: bool = False) -> Trajectory:
    return _default_solver(ivp).sample_trajectory(times, force=force)
