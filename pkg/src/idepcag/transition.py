"""Transition (Cauchy) matrix Phi(t, s) of the ordinary part x' = A(t) x.

Phi is propagated by fixed-step RK4 on the n^2-dimensional matrix ODE;
for constant A a scaling-and-squaring matrix exponential is used instead
(and serves as an independent cross-check of the RK4 path).  Backward
evaluation (t < s) integrates the ODE from s down to t rather than
inverting a forward result.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from ._backend import propagate_matrix_ode
from ._quad import composite_grid, panels_for
from .coeffs import MatrixFunction
from .errors import NumericalError
from .grid import Partition, split

__all__ = ["TransitionEngine", "RhoDiagnostics", "phi", "rho_diagnostics"]


def _operator_norms(samples: np.ndarray) -> np.ndarray:
    """Operator 2-norms of a stack of matrices."""
    return np.linalg.svd(samples, compute_uv=False)[..., 0]


@dataclass
class RhoDiagnostics:
    """Per-interval exponential growth factors of a coefficient matrix.

    ``rho_plus[k] = exp(int_{t_k}^{zeta_k} ||M||)`` over the advanced part,
    ``rho_minus[k]`` the delayed-part analogue, ``rho[k]`` their product,
    and ``rho_sup`` the window supremum of ``rho``.
    """

    rho_plus: np.ndarray
    rho_minus: np.ndarray
    rho: np.ndarray
    rho_sup: float


class TransitionEngine:
    """Evaluates Phi(t, s) with Phi(t, t) = I.

    Parameters
    ----------
    A : MatrixFunction
        Coefficient of the ordinary part.
    steps_per_unit : int
        RK4 step density (per unit time); at least 8.
    method : {"auto", "rk4", "expm"}
        "expm" requires constant A.  "auto" picks expm for constant A.
    """

    def __init__(self, A: MatrixFunction, steps_per_unit: int = 256, method: str = "auto"):
        if steps_per_unit < 8:
            raise ValueError("steps_per_unit must be at least 8")
        if method not in ("auto", "rk4", "expm"):
            raise ValueError(f"unknown method {method!r}")
        if method == "expm" and not A.constant_flag:
            raise ValueError("matrix-exponential method requires constant A")
        self.A = A
        self.n = A.n
        self.steps_per_unit = steps_per_unit
        self.method = method
        self._cache: dict = {}

    # -- internal sweeps ---------------------------------------------------

    def _use_expm(self) -> bool:
        return self.A.constant_flag and self.method != "rk4"

    def _segment_steps(self, length: float, minimum: int = 1) -> int:
        return max(minimum, int(np.ceil(abs(length) * self.steps_per_unit)))

    def _sweep(self, base: float, targets: np.ndarray, adjoint: bool) -> np.ndarray:
        """RK4 sweep from ``base`` through sorted one-sided ``targets``.

        ``adjoint=False`` returns Phi(x, base) at each target x;
        ``adjoint=True`` returns Phi(base, x).
        """
        n = self.n
        out = np.empty((targets.shape[0], n, n))
        if targets.shape[0] == 0:
            return out
        # assemble contiguous steps hitting every target exactly
        boundaries = [base]
        hs = []
        target_steps = np.empty(targets.shape[0], dtype=np.int64)
        prev = base
        for idx, x in enumerate(targets):
            seg = x - prev
            if seg == 0.0:
                target_steps[idx] = len(hs)
            else:
                m = self._segment_steps(seg)
                w = seg / m
                hs.extend([w] * m)
                boundaries.extend(prev + w * np.arange(1, m + 1))
                target_steps[idx] = len(hs)
            prev = x
        boundaries = np.asarray(boundaries)
        hs = np.asarray(hs)
        times = np.empty(2 * hs.shape[0] + 1)
        times[0::2] = boundaries
        times[1::2] = boundaries[:-1] + 0.5 * hs
        a_grid = self.A.eval_many(times)
        snaps = propagate_matrix_ode(a_grid, hs, np.eye(n), adjoint, target_steps)
        if not np.all(np.isfinite(snaps)):
            raise NumericalError(
                f"transition matrix blew up integrating over "
                f"[{min(base, targets[-1])}, {max(base, targets[-1])}]"
            )
        return snaps

    def _sweep_expm(self, base: float, targets: np.ndarray, adjoint: bool) -> np.ndarray:
        A = self.A.eval(0.0)
        out = np.empty((targets.shape[0], self.n, self.n))
        if not np.any(A):
            out[:] = np.eye(self.n)
            return out
        acc = np.eye(self.n)
        prev = base
        for idx, x in enumerate(targets):
            if x != prev:
                step = expm(A * ((prev - x) if adjoint else (x - prev)))
                acc = (acc @ step) if adjoint else (step @ acc)
            out[idx] = acc
            prev = x
        return out

    def _targets_split(self, base, targets):
        targets = np.asarray(targets, dtype=float)
        below = np.sort(targets[targets < base])[::-1]
        above = np.sort(targets[targets >= base])
        return below, above, targets

    def _eval_targets(self, base: float, targets, adjoint: bool) -> np.ndarray:
        below, above, targets = self._targets_split(base, targets)
        sweep = self._sweep_expm if self._use_expm() else self._sweep
        got = {}
        for side in (below, above):
            if side.shape[0]:
                vals = sweep(float(base), side, adjoint)
                for x, v in zip(side, vals):
                    got[float(x)] = v
        return np.array([got[float(x)] for x in targets])

    # -- public API --------------------------------------------------------

    def phi_to(self, base: float, targets) -> np.ndarray:
        """Phi(x, base) for each x in ``targets`` (one sweep per side)."""
        return self._eval_targets(base, targets, adjoint=False)

    def phi_from(self, base: float, targets) -> np.ndarray:
        """Phi(base, x) for each x in ``targets``."""
        return self._eval_targets(base, targets, adjoint=True)

    def phi(self, t: float, s: float) -> np.ndarray:
        """The solution operator Phi(t, s); Phi(t, t) is exactly I."""
        t, s = float(t), float(s)
        if t == s:
            return np.eye(self.n)
        key = (t, s)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if self._use_expm():
            val = expm(self.A.eval(0.0) * (t - s))
        else:
            m = self._segment_steps(t - s, minimum=4)
            w = (t - s) / m
            hs = np.full(m, w)
            times = np.empty(2 * m + 1)
            times[0::2] = s + w * np.arange(m + 1)
            times[1::2] = s + w * (np.arange(m) + 0.5)
            a_grid = self.A.eval_many(times)
            val = propagate_matrix_ode(
                a_grid, hs, np.eye(self.n), False, np.array([m], dtype=np.int64)
            )[0]
            if not np.all(np.isfinite(val)):
                raise NumericalError(
                    f"transition matrix blew up integrating over [{min(s, t)}, {max(s, t)}]"
                )
        self._cache[key] = val
        return val

    def norm_integral(self, a: float, b: float, M: MatrixFunction) -> float:
        """int_a^b ||M(u)|| du (operator 2-norm, composite Gauss-Legendre)."""
        if a == b:
            return 0.0
        lo, hi = min(a, b), max(a, b)
        nodes, weights = composite_grid(lo, hi, panels_for(hi - lo, self.steps_per_unit), 16)
        return float(weights @ _operator_norms(M.eval_many(nodes)))

    def rho_diagnostics(self, p: Partition, M: MatrixFunction) -> RhoDiagnostics:
        """Advanced/delayed growth factors of ``M`` on every interval."""
        K = p.n_intervals
        rp = np.empty(K)
        rm = np.empty(K)
        for k in range(K):
            (tk, zk), (_, tk1) = split(p, k)
            rp[k] = np.exp(self.norm_integral(tk, zk, M))
            rm[k] = np.exp(self.norm_integral(zk, tk1, M))
        rho = rp * rm
        return RhoDiagnostics(rp, rm, rho, float(rho.max()))


def phi(e: TransitionEngine, t: float, s: float) -> np.ndarray:
    return e.phi(t, s)


def rho_diagnostics(e: TransitionEngine, p: Partition, M: MatrixFunction) -> RhoDiagnostics:
    return e.rho_diagnostics(p, M)
