"""Kernel matrices J(t, tau), E(t, tau) and the solvability diagnostics.

J(t, tau) = I + int_tau^t Phi(tau, s) B(s) ds and E(t, tau) =
Phi(t, tau) J(t, tau).  Invertibility of J at the anchor pairs
(t_k, zeta_k) and (t_{k+1}, zeta_k) is what makes the hybrid system
solvable across an interval; ``check_h3`` reports the nu-contraction
quantities and the anchor-pair condition numbers that certify it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._quad import composite_grid, panels_for
from .coeffs import MatrixFunction
from .errors import SingularMatrixError
from .grid import Partition, split
from .transition import TransitionEngine

__all__ = ["KernelEngine", "H3Report", "j_matrix", "e_matrix", "e_inverse", "check_h3"]


@dataclass
class H3Report:
    """Per-interval contraction data and anchor-pair conditioning.

    ``passed`` is true iff both nu suprema are below one and every
    anchor-pair J has condition number within the configured limit.
    """

    nu_plus: np.ndarray
    nu_minus: np.ndarray
    rho_plus_A: np.ndarray
    rho_minus_A: np.ndarray
    rho_A_sup: float
    nu_plus_sup: float
    nu_minus_sup: float
    cond_J_advanced: np.ndarray  # cond of J(t_k, zeta_k)
    cond_J_delayed: np.ndarray  # cond of J(t_{k+1}, zeta_k)
    cond_limit: float
    passed: bool = field(init=False)
    failing_intervals: list = field(init=False)

    def __post_init__(self):
        bad = set()
        for k in range(self.nu_plus.shape[0]):
            if (
                self.nu_plus[k] >= 1.0
                or self.nu_minus[k] >= 1.0
                or not np.isfinite(self.cond_J_advanced[k])
                or not np.isfinite(self.cond_J_delayed[k])
                or self.cond_J_advanced[k] > self.cond_limit
                or self.cond_J_delayed[k] > self.cond_limit
            ):
                bad.add(k)
        self.failing_intervals = sorted(bad)
        self.passed = not bad

    def to_dict(self) -> dict:
        return {
            "passed": bool(self.passed),
            "nu_plus_sup": float(self.nu_plus_sup),
            "nu_minus_sup": float(self.nu_minus_sup),
            "rho_A_sup": float(self.rho_A_sup),
            "cond_limit": float(self.cond_limit),
            "failing_intervals": list(self.failing_intervals),
            "intervals": [
                {
                    "k": k,
                    "rho_plus_A": float(self.rho_plus_A[k]),
                    "rho_minus_A": float(self.rho_minus_A[k]),
                    "nu_plus": float(self.nu_plus[k]),
                    "nu_minus": float(self.nu_minus[k]),
                    "cond_J_advanced": float(self.cond_J_advanced[k]),
                    "cond_J_delayed": float(self.cond_J_delayed[k]),
                }
                for k in range(self.nu_plus.shape[0])
            ],
        }


class KernelEngine:
    """Computes J/E kernels on top of a transition engine.

    Parameters
    ----------
    transition : TransitionEngine
    B : MatrixFunction
        Coefficient of the deviated-argument term.
    quad_order : int
        Gauss-Legendre points per panel (composite, min 4 panels).
    """

    def __init__(
        self,
        transition: TransitionEngine,
        B: MatrixFunction,
        quad_order: int = 16,
        cond_limit: float = 1e12,
        inverse_residual_tol: float = 1e-10,
    ):
        if B.n != transition.n:
            raise ValueError("B dimension does not match A")
        self.transition = transition
        self.B = B
        self.n = B.n
        self.quad_order = quad_order
        self.cond_limit = cond_limit
        self.inverse_residual_tol = inverse_residual_tol
        self._j_cache: dict = {}
        self._e_cache: dict = {}
        self._einv_cache: dict = {}

    def j_matrix(self, t: float, tau: float) -> np.ndarray:
        """J(t, tau); the integral is oriented, so t < tau is allowed."""
        t, tau = float(t), float(tau)
        eye = np.eye(self.n)
        if t == tau or self.B.is_zero():
            return eye
        key = (t, tau)
        hit = self._j_cache.get(key)
        if hit is not None:
            return hit.copy()
        lo, hi = (t, tau) if t < tau else (tau, t)
        sign = 1.0 if t > tau else -1.0
        nodes, weights = composite_grid(
            lo, hi, panels_for(hi - lo, self.transition.steps_per_unit), self.quad_order
        )
        phis = self.transition.phi_from(tau, nodes)
        integrand = phis @ self.B.eval_many(nodes)
        val = eye + sign * np.einsum("q,qij->ij", weights, integrand)
        self._j_cache[key] = val
        return val.copy()

    def e_matrix(self, t: float, tau: float) -> np.ndarray:
        """E(t, tau) = Phi(t, tau) J(t, tau); E(t, t) is exactly I."""
        t, tau = float(t), float(tau)
        if t == tau:
            return np.eye(self.n)
        key = (t, tau)
        hit = self._e_cache.get(key)
        if hit is not None:
            return hit.copy()
        val = self.transition.phi(t, tau) @ self.j_matrix(t, tau)
        self._e_cache[key] = val
        return val.copy()

    def e_inverse(self, t: float, tau: float) -> np.ndarray:
        """Inverse of E(t, tau) by LU with partial pivoting.

        The residual ||E E^-1 - I|| must stay within tolerance; a
        violation signals a kernel-invertibility (solvability) failure at
        this (t, tau) pair.
        """
        t, tau = float(t), float(tau)
        if t == tau:
            return np.eye(self.n)
        key = (t, tau)
        hit = self._einv_cache.get(key)
        if hit is not None:
            return hit.copy()
        E = self.e_matrix(t, tau)
        eye = np.eye(self.n)
        try:
            inv = np.linalg.solve(E, eye)
        except np.linalg.LinAlgError as err:
            raise SingularMatrixError(
                f"E(t={t}, tau={tau}) is singular; kernel invertibility fails"
            ) from err
        residual = np.linalg.norm(E @ inv - eye, 2)
        if not np.isfinite(residual) or residual > self.inverse_residual_tol:
            raise SingularMatrixError(
                f"E(t={t}, tau={tau}) inverse residual {residual:.3e} exceeds "
                f"{self.inverse_residual_tol:.1e}; kernel invertibility fails"
            )
        self._einv_cache[key] = inv
        return inv.copy()

    def check_h3(self, p: Partition) -> H3Report:
        """Contraction quantities and anchor-pair conditioning per interval."""
        K = p.n_intervals
        rho_A = self.transition.rho_diagnostics(p, self.A_function)
        nu_p = np.empty(K)
        nu_m = np.empty(K)
        cond_adv = np.empty(K)
        cond_del = np.empty(K)
        for k in range(K):
            (tk, zk), (_, tk1) = split(p, k)
            # ln rho_k^+-(B) equals the plain integral of ||B||
            int_b_plus = self.transition.norm_integral(tk, zk, self.B)
            int_b_minus = self.transition.norm_integral(zk, tk1, self.B)
            nu_p[k] = rho_A.rho_plus[k] * int_b_plus
            nu_m[k] = rho_A.rho_minus[k] * int_b_minus
            cond_adv[k] = _cond2(self.j_matrix(tk, zk))
            cond_del[k] = _cond2(self.j_matrix(tk1, zk))
        return H3Report(
            nu_plus=nu_p,
            nu_minus=nu_m,
            rho_plus_A=rho_A.rho_plus,
            rho_minus_A=rho_A.rho_minus,
            rho_A_sup=rho_A.rho_sup,
            nu_plus_sup=float(nu_p.max()),
            nu_minus_sup=float(nu_m.max()),
            cond_J_advanced=cond_adv,
            cond_J_delayed=cond_del,
            cond_limit=self.cond_limit,
        )

    @property
    def A_function(self) -> MatrixFunction:
        return self.transition.A


def _cond2(M: np.ndarray) -> float:
    s = np.linalg.svd(M, compute_uv=False)
    if s[-1] == 0.0:
        return np.inf
    return float(s[0] / s[-1])


def j_matrix(k: KernelEngine, t: float, tau: float) -> np.ndarray:
    return k.j_matrix(t, tau)


def e_matrix(k: KernelEngine, t: float, tau: float) -> np.ndarray:
    return k.e_matrix(t, tau)


def e_inverse(k: KernelEngine, t: float, tau: float) -> np.ndarray:
    return k.e_inverse(t, tau)


def check_h3(k: KernelEngine, p: Partition) -> H3Report:
    return k.check_h3(p)
