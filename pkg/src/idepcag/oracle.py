"""Independent solvers that avoid the J/E/W machinery entirely.

The main oracle advances interval by interval, running successive
approximation on the interval's integral equation over a fine uniform
grid with trapezoid quadrature (deliberately not Gauss-Legendre, so the
oracle shares no quadrature code with the production path).  The
deviated-argument value is read from the current iterate by linear
interpolation, which is what makes advanced anchors tractable where
plain forward stepping is not.

Also here: the contraction report used as the oracle's precondition, and
a bare finite-difference stepper for node recursions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import picard_iterate
from .errors import ContractionError, GridError, NumericalError
from .grid import locate
from .vop import IVP

__all__ = [
    "PicardConfig",
    "PicardSolver",
    "picard_solve",
    "H2Report",
    "h2_check",
    "difference_step",
]


@dataclass(frozen=True)
class PicardConfig:
    grid_points_per_interval: int = 512
    max_iterations: int = 200
    tolerance: float = 1e-10

    def __post_init__(self):
        if self.grid_points_per_interval < 8:
            raise ValueError("grid_points_per_interval must be at least 8")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if not (0 < self.tolerance < 1e-4):
            raise ValueError("tolerance must lie in (0, 1e-4)")


def _operator_norms(samples: np.ndarray) -> np.ndarray:
    return np.linalg.svd(samples, compute_uv=False)[..., 0]


class PicardSolver:
    """Fixed-point solution of one IVP, advanced lazily across intervals."""

    def __init__(self, ivp: IVP, config: PicardConfig | None = None):
        self.ivp = ivp
        self.cfg = config or PicardConfig()
        p = ivp.partition
        self.ktau = self._start_index(ivp.tau)
        # per interval index: (tgrid, ygrid); node_values[k] is the
        # post-impulse state at t_k
        self._grids: dict = {}
        self._node_values: dict = {}
        self._advanced_to = self.ktau - 1

    def _start_index(self, tau: float) -> int:
        j = self.ivp.partition.node_index_of(tau)
        return j if j is not None else locate(self.ivp.partition, tau)

    def _interval_range(self, k: int):
        p = self.ivp.partition
        start = self.ivp.tau if k == self.ktau else float(p.nodes[k])
        return start, float(p.nodes[k + 1])

    def _effective_anchor(self, k: int) -> float:
        z = float(self.ivp.partition.anchors[k])
        return max(z, self.ivp.tau) if k == self.ktau else z

    def _run_interval(self, k: int, y_start: np.ndarray):
        sys_ = self.ivp.system
        m = self.cfg.grid_points_per_interval
        a, b = self._interval_range(k)
        tgrid = np.linspace(a, b, m)
        dt = (b - a) / (m - 1)
        a_grid = sys_.A.eval_many(tgrid)
        b_grid = sys_.B.eval_many(tgrid)
        f_grid = (
            sys_.F.eval_many(tgrid)
            if sys_.F is not None
            else np.zeros((m, self.ivp.n))
        )
        # contraction precondition, by trapezoid on the same fine grid
        lip = _operator_norms(a_grid) + _operator_norms(b_grid)
        nu_k = float(np.trapezoid(lip, dx=dt))
        if nu_k >= 1.0:
            raise ContractionError(
                f"contraction fails on interval {k}: integral of ||A||+||B|| "
                f"is {nu_k:.4f} >= 1"
            )
        anchor = self._effective_anchor(k)
        pos = (anchor - a) / dt
        ia = min(int(pos), m - 2)
        wa = pos - ia
        ygrid, iters, converged = picard_iterate(
            a_grid,
            b_grid,
            f_grid,
            y_start,
            dt,
            ia,
            wa,
            self.cfg.tolerance,
            self.cfg.max_iterations,
        )
        if not converged:
            raise NumericalError(
                f"fixed-point iteration did not converge on interval {k} "
                f"within {self.cfg.max_iterations} iterations"
            )
        if not np.all(np.isfinite(ygrid)):
            raise NumericalError(f"oracle iterate blew up on interval {k}")
        return tgrid, ygrid

    def _advance_to(self, k_target: int):
        sys_ = self.ivp.system
        while self._advanced_to < k_target:
            k = self._advanced_to + 1
            if k == self.ktau:
                y_start = self.ivp.y0
            else:
                y_start = self._node_values[k]
            tgrid, ygrid = self._run_interval(k, y_start)
            self._grids[k] = (tgrid, ygrid)
            left = ygrid[-1]
            jump = np.eye(self.ivp.n) + sys_.impulses.c_at(k + 1)
            self._node_values[k + 1] = jump @ left + sys_.impulses.d_at(k + 1)
            self._advanced_to = k

    def solve(self, t: float) -> np.ndarray:
        """y(t); post-impulse at nodes, linear interpolation in between."""
        t = float(t)
        hi = self.ivp.partition.window[1]
        if not (self.ivp.tau <= t <= hi):
            raise GridError(f"t={t} outside the solvable range [{self.ivp.tau}, {hi}]")
        if t == self.ivp.tau:
            return self.ivp.y0.copy()
        j = self.ivp.partition.node_index_of(t)
        if j is not None:
            self._advance_to(j - 1)
            return self._node_values[j].copy()
        k = locate(self.ivp.partition, t)
        self._advance_to(k)
        tgrid, ygrid = self._grids[k]
        pos = (t - tgrid[0]) / (tgrid[1] - tgrid[0])
        i = min(int(pos), tgrid.shape[0] - 2)
        w = pos - i
        return (1.0 - w) * ygrid[i] + w * ygrid[i + 1]

    def left_limit(self, t: float) -> np.ndarray:
        j = self.ivp.partition.node_index_of(float(t))
        if j is None or t <= self.ivp.tau:
            raise GridError(f"left limit only defined at nodes past tau, got t={t}")
        self._advance_to(j - 1)
        return self._grids[j - 1][1][-1].copy()


def picard_solve(ivp: IVP, t: float, config: PicardConfig | None = None) -> np.ndarray:
    """One-shot oracle evaluation; reuse a PicardSolver for many queries."""
    return PicardSolver(ivp, config).solve(t)


@dataclass
class H2Report:
    """Per-interval Lipschitz mass and its supremum."""

    nu_per_interval: np.ndarray
    nu_bar: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "passed": bool(self.passed),
            "nu_bar": float(self.nu_bar),
            "nu_per_interval": [float(v) for v in self.nu_per_interval],
        }


def h2_check(ivp: IVP, grid_points_per_interval: int = 512) -> H2Report:
    """sup_k of int_{t_k}^{t_{k+1}} (||A|| + ||B||), trapezoid rule."""
    p = ivp.partition
    sys_ = ivp.system
    nus = np.empty(p.n_intervals)
    for k in range(p.n_intervals):
        tgrid = np.linspace(p.nodes[k], p.nodes[k + 1], grid_points_per_interval)
        lip = _operator_norms(sys_.A.eval_many(tgrid)) + _operator_norms(
            sys_.B.eval_many(tgrid)
        )
        nus[k] = np.trapezoid(lip, x=tgrid)
    nu_bar = float(nus.max())
    return H2Report(nus, nu_bar, nu_bar < 1.0)


def difference_step(M_of_k, g_of_k, y0, num_steps: int) -> np.ndarray:
    """Iterate y_{k+1} = M_k y_k + g_k.

    ``M_of_k``/``g_of_k`` may be callables of the step index or sequences.
    Returns the (num_steps+1, n) array of iterates starting at y0.
    """
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    n = y0.shape[0]
    M = M_of_k if callable(M_of_k) else (lambda k: M_of_k[k])
    g = g_of_k if callable(g_of_k) else (lambda k: g_of_k[k])
    out = np.empty((num_steps + 1, n))
    out[0] = y0
    for k in range(num_steps):
        Mk = np.asarray(M(k), dtype=float)
        gk = np.atleast_1d(np.asarray(g(k), dtype=float))
        if Mk.shape not in ((n, n), ()) or gk.shape != (n,):
            raise ValueError(f"dimension mismatch at step {k}")
        out[k + 1] = (Mk * out[k] if Mk.shape == () else Mk @ out[k]) + gk
    return out
