"""Composite Gauss-Legendre quadrature grids (internal)."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def gl_rule(order: int):
    """Gauss-Legendre nodes and weights on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_grid(a: float, b: float, panels: int, order: int):
    """Nodes and weights for a composite rule on [a, b] (a < b).

    Returns flat arrays of length ``panels * order``; nodes ascending.
    """
    x, w = gl_rule(order)
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def panels_for(length: float, steps_per_unit: int) -> int:
    """Panel count scaling with the configured step density (min 4)."""
    return max(4, int(np.ceil(abs(length) * steps_per_unit / 32.0)))
