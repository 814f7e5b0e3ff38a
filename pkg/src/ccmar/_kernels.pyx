# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops.  Signatures mirror ``_kernels_py``."""

import numpy as np

from libc.math cimport fabs


cdef inline void _hermite(double t, double t_min, double step, Py_ssize_t n_knots,
                          const double[:, ::1] values, const double[:, ::1] derivs,
                          double* out) noexcept nogil:
    cdef Py_ssize_t idx, c
    cdef double s, s2, s3, h00, h10, h01, h11
    if t < t_min:
        out[0] = 0.0
        out[1] = 0.0
        out[2] = 0.0
        return
    idx = <Py_ssize_t>((t - t_min) / step)
    if idx > n_knots - 2:
        idx = n_knots - 2
    s = (t - (t_min + idx * step)) / step
    s2 = s * s
    s3 = s2 * s
    h00 = 2 * s3 - 3 * s2 + 1
    h10 = s3 - 2 * s2 + s
    h01 = -2 * s3 + 3 * s2
    h11 = s3 - s2
    for c in range(3):
        out[c] = (h00 * values[idx, c] + h10 * step * derivs[idx, c]
                  + h01 * values[idx + 1, c] + h11 * step * derivs[idx + 1, c])


def martingale_gap_max(const double[::1] lo, const double[::1] hi,
                       const double[::1] level, const double[:, ::1] slope,
                       double t_min, double step,
                       const double[:, ::1] values, const double[:, ::1] derivs,
                       int n_refine):
    """Per gap ``i``: max over ``t`` in ``[lo[i], hi[i]]`` of ``|level[i] - H(t) . slope[i]|``.

    Each gap is sampled at both ends and ``n_refine`` interior points.
    Returns ``(best_value, best_t)`` arrays of length ``len(lo)``.
    """
    cdef Py_ssize_t n_gaps = lo.shape[0], n_knots = values.shape[0]
    cdef Py_ssize_t i, k
    cdef double t, width, val, best, best_t
    cdef double hv[3]
    out_val = np.empty(n_gaps)
    out_t = np.empty(n_gaps)
    cdef double[::1] ov = out_val, ot = out_t
    with nogil:
        for i in range(n_gaps):
            best = -1.0
            best_t = lo[i]
            width = hi[i] - lo[i]
            for k in range(n_refine + 2):
                t = lo[i] + width * k / (n_refine + 1)
                if k == n_refine + 1:
                    t = hi[i]
                _hermite(t, t_min, step, n_knots, values, derivs, hv)
                val = fabs(level[i] - (hv[0] * slope[i, 0] + hv[1] * slope[i, 1] + hv[2] * slope[i, 2]))
                if val > best:
                    best = val
                    best_t = t
            ov[i] = best
            ot[i] = best_t
    return out_val, out_t


def marked_partial_sum_max(const double[::1] sorted_resid, const double[::1] marks):
    """Max over tie groups of ``|cumsum(marks)|`` along ascending residuals.

    Returns ``(max_abs, residual_at_max)``; the partial sum is only read at
    the last member of each tie group.
    """
    cdef Py_ssize_t n = sorted_resid.shape[0], i
    cdef double run = 0.0, best = 0.0, loc = sorted_resid[0] if n > 0 else 0.0
    with nogil:
        for i in range(n):
            run += marks[i]
            if i + 1 < n and sorted_resid[i + 1] == sorted_resid[i]:
                continue
            if fabs(run) > best:
                best = fabs(run)
                loc = sorted_resid[i]
    return best, loc


def sup_abs_walk(const double[:, ::1] increments, bint bridge):
    """Row-wise ``max_k |W_k|`` for ``W_k = sum_{i<=k} increments[:, i]``.

    With ``bridge`` the walk is pinned: ``W_k - (k / n) W_n``.
    """
    cdef Py_ssize_t n_paths = increments.shape[0], n_steps = increments.shape[1]
    cdef Py_ssize_t i, k
    cdef double total, run, best, v
    out = np.empty(n_paths)
    cdef double[::1] o = out
    with nogil:
        for i in range(n_paths):
            total = 0.0
            if bridge:
                for k in range(n_steps):
                    total += increments[i, k]
            run = 0.0
            best = 0.0
            for k in range(n_steps):
                run += increments[i, k]
                if bridge:
                    v = fabs(run - ((k + 1) / <double>n_steps) * total)
                else:
                    v = fabs(run)
                if v > best:
                    best = v
            o[i] = best
    return out
