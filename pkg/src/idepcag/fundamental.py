"""Fundamental matrix W(t, tau) of the homogeneous impulsive system.

Within one interval W(t, s) = E(t, zeta_k) E^-1(s, zeta_k); across
intervals the global W is a reversed product of per-interval W factors
interleaved with the jump factors (I + C_k), with empty products equal
to the identity.

Conventions baked in here:

* solutions are right-continuous at nodes, so evaluating W at exactly a
  node time t_j includes the (I + C_j) factor (and the window's right
  endpoint t_N carries the final jump);
* when the initial time tau lies past its interval's anchor
  (zeta_{k(tau)} < tau) the anchor of that first interval is replaced by
  tau, so the advanced-part machinery never reaches left of tau.
"""

from __future__ import annotations

import numpy as np

from .coeffs import ImpulseSequence
from .errors import GridError
from .grid import Partition, locate
from .kernel import KernelEngine

__all__ = ["FundamentalEngine", "w_local", "w_global", "solve_homogeneous"]


class FundamentalEngine:
    """Builds per-interval and global fundamental matrices.

    Products are accumulated factor by factor in index order with explicit
    left-multiplication (no reassociation), so results are deterministic.
    """

    def __init__(self, kernel: KernelEngine, partition: Partition, impulses: ImpulseSequence):
        if impulses.n != kernel.n:
            raise ValueError("impulse dimension does not match the system")
        self.kernel = kernel
        self.partition = partition
        self.impulses = impulses
        self.n = kernel.n
        self._jump_cache: dict = {}
        self._w_interval_cache: dict = {}

    # -- indexing helpers ----------------------------------------------------

    def solve_index(self, t: float) -> int:
        """Interval index used by the solvers: a node time belongs to its
        own interval (right-continuity), including the final node."""
        j = self.partition.node_index_of(float(t))
        if j is not None:
            return j
        return locate(self.partition, t)

    def effective_anchor(self, k: int, tau: float) -> float:
        """Anchor of interval k, with the initial-interval replacement
        gamma(tau) := tau applied when zeta_k < tau."""
        z = float(self.partition.anchors[k])
        return max(z, float(tau))

    def jump(self, k: int) -> np.ndarray:
        hit = self._jump_cache.get(k)
        if hit is None:
            hit = self.impulses.jump_factor(k)
            self._jump_cache[k] = hit
        return hit

    # -- W factors -------------------------------------------------------------

    def _w_local_anchor(self, t: float, s: float, anchor: float) -> np.ndarray:
        if t == s:
            return np.eye(self.n)
        E_t = self.kernel.e_matrix(t, anchor)
        if s == anchor:
            return E_t
        return E_t @ self.kernel.e_inverse(s, anchor)

    def w_local(self, t: float, s: float) -> np.ndarray:
        """W(t, s) = E(t, zeta_k) E^-1(s, zeta_k) for t, s in one interval."""
        kt, ks = locate(self.partition, t), locate(self.partition, s)
        if kt != ks:
            raise GridError(
                f"w_local needs t and s in the same interval, got k(t)={kt}, k(s)={ks}"
            )
        return self._w_local_anchor(float(t), float(s), float(self.partition.anchors[kt]))

    def w_interval(self, r: int) -> np.ndarray:
        """W(t_{r+1}, t_r), cached per interval."""
        hit = self._w_interval_cache.get(r)
        if hit is None:
            nodes, anchors = self.partition.nodes, self.partition.anchors
            hit = self._w_local_anchor(float(nodes[r + 1]), float(nodes[r]), float(anchors[r]))
            self._w_interval_cache[r] = hit
        return hit

    def w_suffix_products(self, t: float, k_from: int, kt: int | None = None) -> dict:
        """W(t, t_r) for every node index r in (k_from, kt].

        ``kt`` defaults to the solve index of ``t``; passing ``kt = j - 1``
        with ``t = t_j`` evaluates the left-limit products.  Accumulated
        from the top factor downward so each product reuses the previous
        one.
        """
        if kt is None:
            kt = self.solve_index(t)
        out: dict = {}
        if kt <= k_from:
            return out
        nodes = self.partition.nodes
        if t == nodes[kt]:
            cur = np.eye(self.n)
        else:
            cur = self._w_local_anchor(float(t), float(nodes[kt]), float(self.partition.anchors[kt]))
        out[kt] = cur
        for r in range(kt - 1, k_from, -1):
            cur = cur @ self.jump(r + 1) @ self.w_interval(r)
            out[r] = cur
        return out

    def w_first(self, tau: float) -> np.ndarray:
        """W(t_{k(tau)+1}, tau) with the initial-anchor convention."""
        ktau = self.solve_index(tau)
        zhat = self.effective_anchor(ktau, tau)
        return self._w_local_anchor(float(self.partition.nodes[ktau + 1]), float(tau), zhat)

    def w_global(self, t: float, tau: float) -> np.ndarray:
        """Fundamental matrix W(t, tau) for tau <= t.

        Equal to the reversed product
        W(t, t_{k(t)}) * prod (I+C_{j+1}) W(t_{j+1}, t_j) * (I+C_{k(tau)+1}) W(t_{k(tau)+1}, tau),
        and to the single-interval W when k(t) = k(tau).
        """
        t, tau = float(t), float(tau)
        if t < tau:
            raise GridError("w_global solves forward only (tau <= t)")
        lo, hi = self.partition.window
        if not (self.partition.contains(t) and self.partition.contains(tau)):
            raise GridError(f"[{tau}, {t}] not inside window [{lo}, {hi}]")
        kt = self.solve_index(t)
        ktau = self.solve_index(tau)
        if kt == ktau:
            return self._w_local_anchor(t, tau, self.effective_anchor(ktau, tau))
        acc = self.jump(ktau + 1) @ self.w_first(tau)
        for j in range(ktau + 1, kt):
            acc = self.jump(j + 1) @ self.w_interval(j) @ acc
        nodes = self.partition.nodes
        if t != nodes[kt]:
            acc = self._w_local_anchor(t, float(nodes[kt]), float(self.partition.anchors[kt])) @ acc
        return acc

    def solve_homogeneous(self, tau: float, w0, t: float) -> np.ndarray:
        """w(t) = W(t, tau) w(tau)."""
        w0 = np.asarray(w0, dtype=float)
        if w0.shape != (self.n,):
            raise ValueError(f"w0 must have shape ({self.n},)")
        return self.w_global(t, tau) @ w0


def w_local(f: FundamentalEngine, t: float, s: float) -> np.ndarray:
    return f.w_local(t, s)


def w_global(f: FundamentalEngine, t: float, tau: float) -> np.ndarray:
    return f.w_global(t, tau)


def solve_homogeneous(f: FundamentalEngine, tau: float, w0, t: float) -> np.ndarray:
    return f.solve_homogeneous(tau, w0, t)
