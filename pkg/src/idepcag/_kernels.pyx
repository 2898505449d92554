# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled numeric kernels.

Semantics match :mod:`idepcag._kernels_py` exactly; that module is the
reference implementation and the fallback when this extension is absent.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline void _mat_mul(double[:, ::1] out, double[:, ::1] a, double[:, ::1] b, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j, l
    cdef double acc
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for l in range(n):
                acc += a[i, l] * b[l, j]
            out[i, j] = acc


cdef inline void _axpy_mat(double[:, ::1] out, double[:, ::1] y, double c, double[:, ::1] k, Py_ssize_t n) noexcept nogil:
    # out = y + c * k
    cdef Py_ssize_t i, j
    for i in range(n):
        for j in range(n):
            out[i, j] = y[i, j] + c * k[i, j]


def propagate_matrix_ode(a_grid, hs, y0, adjoint, out_steps):
    """Fixed-step RK4 sweep of Y' = A(t) Y (or Y' = -Y A(t)) with snapshots.

    See the pure-Python twin for the full parameter description.
    """
    cdef double[:, :, ::1] A = np.ascontiguousarray(a_grid, dtype=np.float64)
    cdef double[::1] h = np.ascontiguousarray(hs, dtype=np.float64)
    cdef cnp.int64_t[::1] outs = np.ascontiguousarray(out_steps, dtype=np.int64)
    cdef Py_ssize_t m = h.shape[0]
    cdef Py_ssize_t n = A.shape[1]
    cdef bint adj = bool(adjoint)

    out_arr = np.empty((outs.shape[0], n, n), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    y_arr = np.array(y0, dtype=np.float64, order="C")
    cdef double[:, ::1] y = y_arr

    k1_arr = np.empty((n, n)); k2_arr = np.empty((n, n))
    k3_arr = np.empty((n, n)); k4_arr = np.empty((n, n))
    tmp_arr = np.empty((n, n))
    cdef double[:, ::1] k1 = k1_arr, k2 = k2_arr, k3 = k3_arr, k4 = k4_arr, tmp = tmp_arr

    cdef Py_ssize_t i, j, p, q, snap = 0
    cdef double step, sgn

    while snap < outs.shape[0] and outs[snap] == 0:
        out[snap, :, :] = y
        snap += 1

    with nogil:
        sgn = -1.0 if adj else 1.0
        for i in range(m):
            step = h[i]
            if adj:
                _mat_mul(k1, y, A[2 * i], n)
                _axpy_mat(tmp, y, -0.5 * step, k1, n)
                _mat_mul(k2, tmp, A[2 * i + 1], n)
                _axpy_mat(tmp, y, -0.5 * step, k2, n)
                _mat_mul(k3, tmp, A[2 * i + 1], n)
                _axpy_mat(tmp, y, -step, k3, n)
                _mat_mul(k4, tmp, A[2 * i + 2], n)
            else:
                _mat_mul(k1, A[2 * i], y, n)
                _axpy_mat(tmp, y, 0.5 * step, k1, n)
                _mat_mul(k2, A[2 * i + 1], tmp, n)
                _axpy_mat(tmp, y, 0.5 * step, k2, n)
                _mat_mul(k3, A[2 * i + 1], tmp, n)
                _axpy_mat(tmp, y, step, k3, n)
                _mat_mul(k4, A[2 * i + 2], tmp, n)
            for p in range(n):
                for q in range(n):
                    y[p, q] = y[p, q] + sgn * (step / 6.0) * (
                        k1[p, q] + 2.0 * k2[p, q] + 2.0 * k3[p, q] + k4[p, q]
                    )
            with gil:
                while snap < outs.shape[0] and outs[snap] == i + 1:
                    out[snap, :, :] = y
                    snap += 1
    return out_arr


def picard_iterate(a_grid, b_grid, f_grid, y_start, dt, ia, wa, tol, max_iter):
    """Successive approximation on one interval (trapezoid cumulative sums).

    See the pure-Python twin for the full parameter description.
    """
    cdef double[:, :, ::1] A = np.ascontiguousarray(a_grid, dtype=np.float64)
    cdef double[:, :, ::1] B = np.ascontiguousarray(b_grid, dtype=np.float64)
    cdef double[:, ::1] F = np.ascontiguousarray(f_grid, dtype=np.float64)
    cdef double[::1] ys = np.ascontiguousarray(y_start, dtype=np.float64)
    cdef Py_ssize_t m = A.shape[0]
    cdef Py_ssize_t n = A.shape[1]
    cdef Py_ssize_t anchor_i = ia
    cdef double anchor_w = wa
    cdef double ddt = dt
    cdef double dtol = tol
    cdef int iters = max_iter

    y_arr = np.empty((m, n), dtype=np.float64)
    y_arr[:] = np.asarray(y_start, dtype=np.float64)
    g_arr = np.empty((m, n), dtype=np.float64)
    new_arr = np.empty((m, n), dtype=np.float64)
    ya_arr = np.empty(n, dtype=np.float64)
    cdef double[:, ::1] y = y_arr, g = g_arr, new = new_arr
    cdef double[::1] ya = ya_arr

    cdef Py_ssize_t it, i, p, q, ia1
    cdef double acc, diff, d
    cdef bint converged = False
    cdef int used = 0

    ia1 = anchor_i + 1 if anchor_i + 1 < m else m - 1
    with nogil:
        for it in range(1, iters + 1):
            for p in range(n):
                ya[p] = (1.0 - anchor_w) * y[anchor_i, p] + anchor_w * y[ia1, p]
            for i in range(m):
                for p in range(n):
                    acc = F[i, p]
                    for q in range(n):
                        acc += A[i, p, q] * y[i, q] + B[i, p, q] * ya[q]
                    g[i, p] = acc
            diff = 0.0
            for p in range(n):
                new[0, p] = ys[p]
                d = new[0, p] - y[0, p]
                if d < 0.0:
                    d = -d
                if d > diff:
                    diff = d
            for i in range(1, m):
                for p in range(n):
                    new[i, p] = new[i - 1, p] + 0.5 * ddt * (g[i - 1, p] + g[i, p])
                    d = new[i, p] - y[i, p]
                    if d < 0.0:
                        d = -d
                    if d > diff:
                        diff = d
            for i in range(m):
                for p in range(n):
                    y[i, p] = new[i, p]
            used = <int> it
            if diff <= dtol:
                converged = True
                break
    return y_arr, used, converged
