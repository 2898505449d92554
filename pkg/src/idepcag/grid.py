"""Partitions {t_k}, anchors {zeta_k}, and the argument map gamma(t).

The deviating argument is the step function gamma(t) = zeta_k for
t in [t_k, t_{k+1}), with zeta_k in [t_k, t_{k+1}].  Each interval
splits into an advanced part [t_k, zeta_k] (the argument lies ahead)
and a delayed part [zeta_k, t_{k+1}].

Interval membership uses the half-open convention so the interval
index k(t) is single-valued; the window's right endpoint maps to the
last interval so trajectories can be sampled there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridError

__all__ = [
    "Partition",
    "UniformGrid",
    "ChiuGrid",
    "ExplicitGrid",
    "build",
    "locate",
    "gamma",
    "split",
]

# Relative slack used when snapping window endpoints onto lattice nodes
# and when admitting times at the very edge of the window.
_SNAP = 1e-9


@dataclass(frozen=True)
class Partition:
    """A finite window of nodes with one anchor per interval."""

    nodes: np.ndarray
    anchors: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        anchors = np.asarray(self.anchors, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise GridError("a partition needs at least two nodes")
        if np.any(~np.isfinite(nodes)) or np.any(~np.isfinite(anchors)):
            raise GridError("nodes and anchors must be finite")
        if np.any(np.diff(nodes) <= 0):
            raise GridError("nodes must be strictly increasing")
        if anchors.shape != (nodes.size - 1,):
            raise GridError("need exactly one anchor per interval")
        if np.any(anchors < nodes[:-1]) or np.any(anchors > nodes[1:]):
            raise GridError("each anchor must satisfy t_k <= zeta_k <= t_{k+1}")
        nodes.setflags(write=False)
        anchors.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "anchors", anchors)

    @property
    def window(self):
        return float(self.nodes[0]), float(self.nodes[-1])

    @property
    def n_intervals(self):
        return self.nodes.size - 1

    def contains(self, t: float) -> bool:
        lo, hi = self.window
        tol = _SNAP * max(1.0, abs(lo), abs(hi))
        return lo - tol <= t <= hi + tol

    def node_index_of(self, t: float):
        """Index j with nodes[j] == t, or None if t is not a node."""
        i = int(np.searchsorted(self.nodes, t))
        if i < self.nodes.size and self.nodes[i] == t:
            return i
        return None


@dataclass(frozen=True)
class UniformGrid:
    """Nodes t_k = t_min - l + k*h, anchors zeta_k = t_k + beta*h."""

    h: float
    l: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if not (self.h > 0):
            raise GridError(f"step must be positive, got h={self.h}")
        if not (0.0 <= self.beta <= 1.0):
            raise GridError(f"beta must lie in [0, 1], got {self.beta}")
        if not (0.0 <= self.l < self.h):
            raise GridError(f"offset must satisfy 0 <= l < h, got l={self.l}")


@dataclass(frozen=True)
class ChiuGrid:
    """The mixed-type argument gamma(t) = p*floor((t+l)/p).

    Nodes sit on the absolute lattice t_k = k*p - l and the anchor of
    [k*p - l, (k+1)*p - l) is k*p, so the window may be widened to the
    enclosing lattice points.
    """

    p: float
    l: float

    def __post_init__(self):
        if not (self.p > 0):
            raise GridError(f"period must be positive, got p={self.p}")
        if not (0.0 <= self.l < self.p):
            raise GridError(f"offset must satisfy 0 <= l < p, got l={self.l}")


@dataclass(frozen=True)
class ExplicitGrid:
    nodes: tuple
    anchors: tuple

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(float(v) for v in self.nodes))
        object.__setattr__(self, "anchors", tuple(float(v) for v in self.anchors))


def build(spec, window) -> Partition:
    """Construct the partition of a window from a grid specification.

    The returned partition covers ``window``; for lattice-based specs the
    endpoints are snapped (or widened) to lattice nodes.
    """
    w0, w1 = float(window[0]), float(window[1])
    if not (w1 > w0):
        raise GridError(f"window must be nonempty, got [{w0}, {w1}]")

    if isinstance(spec, ExplicitGrid):
        return Partition(np.array(spec.nodes), np.array(spec.anchors))

    if isinstance(spec, UniformGrid):
        # lattice anchored at the window start, shifted left by the offset
        origin = w0 - spec.l
        count = int(np.ceil((w1 - origin) / spec.h - _SNAP))
        nodes = origin + spec.h * np.arange(count + 1)
        anchors = nodes[:-1] + spec.beta * spec.h
        # beta*h can land an ulp past the right node; clamp
        anchors = np.minimum(anchors, nodes[1:])
        return Partition(nodes, anchors)

    if isinstance(spec, ChiuGrid):
        # absolute lattice k*p - l; widen to cover the window
        i0 = int(np.floor((w0 + spec.l) / spec.p + _SNAP))
        i1 = int(np.ceil((w1 + spec.l) / spec.p - _SNAP))
        if i1 <= i0:
            i1 = i0 + 1
        ks = np.arange(i0, i1 + 1)
        nodes = ks * spec.p - spec.l
        anchors = ks[:-1] * spec.p
        return Partition(nodes, anchors)

    raise GridError(f"unknown grid spec {type(spec).__name__}")


def locate(p: Partition, t: float) -> int:
    """Interval index k(t) with t in [t_k, t_{k+1}).

    The right endpoint of the window maps to the last interval.
    """
    lo, hi = p.window
    if not p.contains(t):
        raise GridError(f"t={t} outside window [{lo}, {hi}]")
    if t >= p.nodes[-1]:
        return p.n_intervals - 1
    k = int(np.searchsorted(p.nodes, t, side="right")) - 1
    return max(k, 0)


def gamma(p: Partition, t: float) -> float:
    """The piecewise constant argument gamma(t) = zeta_{k(t)}."""
    return float(p.anchors[locate(p, t)])


def split(p: Partition, k: int):
    """Advanced and delayed subintervals of [t_k, t_{k+1}].

    Returns ``((t_k, zeta_k), (zeta_k, t_{k+1}))``; either part may be
    degenerate.
    """
    if not (0 <= k < p.n_intervals):
        raise GridError(f"interval index {k} out of range")
    tk, tk1 = float(p.nodes[k]), float(p.nodes[k + 1])
    zk = float(p.anchors[k])
    return (tk, zk), (zk, tk1)
