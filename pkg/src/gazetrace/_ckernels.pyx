# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-sample kernels. Keep in lockstep with ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, INFINITY

cnp.import_array()


def velocities(const double[::1] xs, const double[::1] ys, const long long[::1] ts):
    cdef Py_ssize_t n = xs.shape[0]
    cdef Py_ssize_t i
    cdef long long dt
    cdef double dx, dy
    out_arr = np.zeros(n - 1 if n > 1 else 0, dtype=np.float64)
    cdef double[::1] out = out_arr
    for i in range(1, n):
        dt = ts[i] - ts[i - 1]
        if dt < 0:
            raise ValueError(i)
        dx = xs[i] - xs[i - 1]
        dy = ys[i] - ys[i - 1]
        if dt == 0:
            out[i - 1] = INFINITY
        else:
            out[i - 1] = sqrt(dx * dx + dy * dy) / (<double>dt / 1000.0)
    return out_arr


def ivt_labels(const double[::1] vel, double v_basic):
    cdef Py_ssize_t n = vel.shape[0]
    cdef Py_ssize_t i
    out_arr = np.zeros(n, dtype=np.int8)
    cdef signed char[::1] out = out_arr
    for i in range(n):
        out[i] = 0 if vel[i] <= v_basic else 1
    return out_arr


def cluster_starts(const double[::1] xs, const double[::1] ys,
                   const double[::1] vel, double v_advanced, double tau):
    cdef Py_ssize_t n = xs.shape[0]
    cdef Py_ssize_t i, k = 1
    cdef double sx, sy, cx, cy, dx, dy
    cdef double tau2 = tau * tau
    cdef long long count
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    starts_arr = np.zeros(n, dtype=np.int64)
    cdef long long[::1] starts = starts_arr
    sx = xs[0]
    sy = ys[0]
    count = 1
    for i in range(1, n):
        cx = sx / count
        cy = sy / count
        dx = xs[i] - cx
        dy = ys[i] - cy
        if vel[i - 1] < v_advanced and dx * dx + dy * dy <= tau2:
            sx += xs[i]
            sy += ys[i]
            count += 1
        else:
            starts[k] = i
            k += 1
            sx = xs[i]
            sy = ys[i]
            count = 1
    return starts_arr[:k].copy()
