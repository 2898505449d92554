"""Pure-NumPy implementations of the hot numeric kernels.

Kept signature-compatible with the compiled extension ``_kernels`` so the
backend can be swapped at import time (see :mod:`idepcag._backend`).
"""

from __future__ import annotations

import numpy as np


def propagate_matrix_ode(a_grid, hs, y0, adjoint, out_steps):
    """Fixed-step RK4 sweep of a linear matrix ODE with snapshots.

    Parameters
    ----------
    a_grid : (2m+1, n, n) array
        Coefficient samples along the sweep: index ``2i`` is the start of
        step ``i``, ``2i+1`` its midpoint, ``2m`` the final boundary.
    hs : (m,) array
        Signed step widths.
    y0 : (n, n) array
        State at boundary 0.
    adjoint : bool
        ``False`` integrates ``Y' = A(t) Y``; ``True`` integrates
        ``Y' = -Y A(t)``.
    out_steps : (k,) int array
        Sorted boundary indices (0..m) at which to record the state.

    Returns
    -------
    (k, n, n) array of snapshots.
    """
    hs = np.asarray(hs, dtype=float)
    out_steps = np.asarray(out_steps, dtype=np.int64)
    m = hs.shape[0]
    n = y0.shape[0]
    out = np.empty((out_steps.shape[0], n, n))
    y = np.array(y0, dtype=float)
    j = 0
    while j < out_steps.shape[0] and out_steps[j] == 0:
        out[j] = y
        j += 1
    for i in range(m):
        h = hs[i]
        a0 = a_grid[2 * i]
        am = a_grid[2 * i + 1]
        a1 = a_grid[2 * i + 2]
        if adjoint:
            k1 = -(y @ a0)
            k2 = -((y + (h / 2.0) * k1) @ am)
            k3 = -((y + (h / 2.0) * k2) @ am)
            k4 = -((y + h * k3) @ a1)
        else:
            k1 = a0 @ y
            k2 = am @ (y + (h / 2.0) * k1)
            k3 = am @ (y + (h / 2.0) * k2)
            k4 = a1 @ (y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        while j < out_steps.shape[0] and out_steps[j] == i + 1:
            out[j] = y
            j += 1
    return out


def picard_iterate(a_grid, b_grid, f_grid, y_start, dt, ia, wa, tol, max_iter):
    """Successive approximation on one interval of the hybrid system.

    Iterates ``y <- y_start + cumtrapz(A y + B y(anchor) + f)`` on a
    uniform fine grid until the sup-norm change drops below ``tol``.
    The anchor value is read from the current iterate by linear
    interpolation: ``y(anchor) = (1-wa) y[ia] + wa y[ia+1]``.

    Returns
    -------
    (ygrid, iterations, converged)
    """
    a_grid = np.asarray(a_grid, dtype=float)
    b_grid = np.asarray(b_grid, dtype=float)
    f_grid = np.asarray(f_grid, dtype=float)
    y_start = np.asarray(y_start, dtype=float)
    m = a_grid.shape[0]
    y = np.broadcast_to(y_start, (m, y_start.shape[0])).copy()
    half_dt = 0.5 * dt
    for it in range(1, max_iter + 1):
        ya = (1.0 - wa) * y[ia] + wa * y[min(ia + 1, m - 1)]
        g = np.einsum("ipq,iq->ip", a_grid, y) + b_grid @ ya + f_grid
        new = np.empty_like(y)
        new[0] = y_start
        np.cumsum(half_dt * (g[1:] + g[:-1]), axis=0, out=new[1:])
        new[1:] += y_start
        diff = float(np.max(np.abs(new - y)))
        y = new
        if diff <= tol:
            return y, it, True
    return y, max_iter, False
