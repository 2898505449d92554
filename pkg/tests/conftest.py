"""Shared helpers: random hypothesis-passing systems for cross-path tests."""

from __future__ import annotations

import numpy as np
import pytest

from idepcag import (
    IVP,
    ExplicitGrid,
    ImpulseSequence,
    LinearSystem,
    MatrixFunction,
    VectorFunction,
    build,
)


def random_passing_ivp(
    rng: np.random.Generator,
    n: int | None = None,
    n_intervals: int | None = None,
    forced: bool = True,
    with_impulses: bool = True,
    with_offsets: bool = True,
    anchor_style: str = "random",
    constant_coeffs: bool = False,
    tau_on_node: bool | None = None,
):
    """An IVP whose coefficients are scaled so the contraction (H2) and
    kernel-invertibility (H3) hypotheses hold with room to spare.

    ``anchor_style``: "random" places anchors uniformly (occasionally at
    an endpoint); "delayed"/"advanced" pin every anchor to the left/right
    node.  ``tau_on_node`` False puts tau inside the first interval, which
    exercises the initial-anchor replacement.
    """
    n = int(rng.integers(1, 4)) if n is None else n
    K = int(rng.integers(6, 13)) if n_intervals is None else n_intervals
    lens = rng.uniform(0.4, 1.0, K)
    nodes = np.concatenate([[0.0], np.cumsum(lens)])
    if anchor_style == "delayed":
        anchors = nodes[:-1].copy()
    elif anchor_style == "advanced":
        anchors = nodes[1:].copy()
    else:
        betas = rng.uniform(0.0, 1.0, K)
        snap = rng.random(K)
        betas[snap < 0.12] = 0.0
        betas[snap > 0.88] = 1.0
        anchors = nodes[:-1] + betas * lens
    partition = build(
        ExplicitGrid(nodes=list(nodes), anchors=list(anchors)),
        (float(nodes[0]), float(nodes[-1])),
    )

    cap = 0.55 / lens.max()
    cap_a = cap * float(rng.uniform(0.3, 0.7))
    cap_b = cap - cap_a

    def coeff_matrix(cap_x):
        rows = []
        for _ in range(n):
            row = []
            for _ in range(n):
                amp = cap_x / n
                if constant_coeffs:
                    row.append(f"{round(float(rng.uniform(-amp, amp)), 6)}")
                else:
                    c0 = round(float(rng.uniform(-amp, amp)) * 0.5, 6)
                    c1 = round(float(rng.uniform(-amp, amp)) * 0.5, 6)
                    w = round(float(rng.uniform(0.5, 3.0)), 4)
                    row.append(f"{c0} + {c1}*sin({w}*t)")
            rows.append(row)
        return MatrixFunction(rows)

    A = coeff_matrix(cap_a)
    B = coeff_matrix(cap_b)
    F = None
    if forced:
        entries = []
        for _ in range(n):
            c0 = round(float(rng.uniform(-1, 1)), 6)
            c1 = round(float(rng.uniform(-1, 1)), 6)
            w = round(float(rng.uniform(0.5, 3.0)), 4)
            entries.append(f"{c0} + {c1}*cos({w}*t)")
        F = VectorFunction(entries)
    c_items = {}
    d_items = {}
    if with_impulses:
        for k in range(1, K + 1):
            c_items[k] = rng.uniform(-1.0, 1.0, (n, n)) * (0.35 / n)
    if forced and with_offsets:
        for k in range(1, K + 1):
            d_items[k] = rng.uniform(-0.8, 0.8, n)
    impulses = ImpulseSequence(n=n, c_items=c_items, d_items=d_items)

    on_node = bool(rng.random() < 0.5) if tau_on_node is None else tau_on_node
    tau = float(nodes[0]) if on_node else float(rng.uniform(nodes[0] + 0.05, nodes[1] - 0.05))
    y0 = rng.uniform(-1.0, 1.0, n)
    system = LinearSystem(A=A, B=B, F=F, impulses=impulses)
    return IVP(system=system, partition=partition, tau=tau, y0=y0)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
