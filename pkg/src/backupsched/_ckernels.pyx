# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops; see ``_pykernels`` for the reference semantics."""
import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, fmod

cnp.import_array()

cdef double TOL = 1e-9


cdef inline double _circ_dist(double a, double b, double period) nogil:
    cdef double d = fmod(fabs(a - b), period)
    if period - d < d:
        return period - d
    return d


cdef inline double _wrap(double x, double period) nogil:
    cdef double r = fmod(x, period)
    if r < 0:
        r += period
    return r


def gaussian_sum(const double[::1] grid, const double[::1] points, double bandwidth):
    cdef Py_ssize_t n_grid = grid.shape[0], n_pts = points.shape[0]
    cdef Py_ssize_t j, i
    cdef double acc, z, inv_h = 1.0 / bandwidth
    out = np.empty(n_grid, dtype=np.float64)
    cdef double[::1] res = out
    with nogil:
        for j in range(n_grid):
            acc = 0.0
            for i in range(n_pts):
                z = (grid[j] - points[i]) * inv_h
                acc += exp(-0.5 * z * z)
            res[j] = acc
    return out


def exclude(double[::1] values, const double[::1] grid, double tau,
            double period, double spacing, double collar):
    cdef Py_ssize_t j, n = grid.shape[0]
    cdef double d
    with nogil:
        for j in range(n):
            d = _circ_dist(grid[j], tau, period)
            if d <= spacing + TOL:
                values[j] = 0.0
            elif collar > 0 and d <= spacing + collar + TOL:
                values[j] *= 0.5


def dilated_mask(const double[::1] grid, const double[::1] starts,
                 const double[::1] lengths, double width, double period):
    cdef Py_ssize_t j, i, n = grid.shape[0], m = starts.shape[0]
    cdef double lo, off
    out = np.zeros(n, dtype=np.bool_)
    cdef cnp.npy_bool[::1] res = out
    with nogil:
        for j in range(n):
            lo = grid[j] - 0.5 * width
            for i in range(m):
                off = _wrap(starts[i] - lo, period)
                if off < width - TOL or off + lengths[i] > period + TOL:
                    res[j] = 1
                    break
    return out


def count_active_many(const double[::1] times, const double[::1] starts,
                      const double[::1] widths, double period):
    cdef Py_ssize_t j, i, n = times.shape[0], m = starts.shape[0]
    cdef double off
    cdef long c
    out = np.zeros(n, dtype=np.int64)
    cdef long long[::1] res = out
    with nogil:
        for j in range(n):
            c = 0
            for i in range(m):
                off = _wrap(times[j] - starts[i], period)
                if off > 0 and off < widths[i]:
                    c += 1
            res[j] = c
    return out
