# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: the max-plus knapsack DP and mean CSF shares over samples."""

import numpy as np
from libc.math cimport exp, pow, fabs

DEF EXP_CAP = 700.0


def maxplus_dp(double[:, ::1] gain):
    """Maximize sum_i gain[i, k_i] subject to sum_i k_i <= G - 1.

    Returns ``(value, units)``; ties resolve to the lexicographically smallest units.
    """
    cdef Py_ssize_t n = gain.shape[0], G = gain.shape[1]
    cdef Py_ssize_t i, c, k, best_k
    cdef double best, v
    nxt_arr = np.zeros(G)
    cur_arr = np.empty(G)
    choice_arr = np.empty((n, G), dtype=np.int64)
    units_arr = np.empty(n, dtype=np.int64)
    cdef double[::1] nxt = nxt_arr, cur = cur_arr, tmp
    cdef long long[:, ::1] choice = choice_arr
    cdef long long[::1] units = units_arr
    with nogil:
        for i in range(n - 1, -1, -1):
            for c in range(G):
                best = gain[i, 0] + nxt[c]
                best_k = 0
                for k in range(1, c + 1):
                    v = gain[i, k] + nxt[c - k]
                    if v > best:
                        best = v
                        best_k = k
                cur[c] = best
                choice[i, c] = best_k
            tmp = nxt
            nxt = cur
            cur = tmp
        c = G - 1
        for i in range(n):
            units[i] = choice[i, c]
            c -= choice[i, c]
    return float(nxt[G - 1]), units_arr


cdef inline double _power_a(double x, double y, double R, double alpha) nogil:
    cdef double t
    if x == y:
        return alpha
    if x > y:
        t = pow(y / x, R)
        return alpha / (alpha + (1.0 - alpha) * t)
    t = pow(x / y, R)
    return alpha * t / (alpha * t + (1.0 - alpha))


cdef inline double _logit_a(double x, double y, double R, double alpha) nogil:
    cdef double d = R * (y - x), e
    if x == y:
        return alpha
    if fabs(d) > EXP_CAP:
        return 0.0 if d >= 0 else 1.0
    if d >= 0:
        e = exp(-d)
        return alpha * e / (alpha * e + (1.0 - alpha))
    e = exp(d)
    return alpha / (alpha + (1.0 - alpha) * e)


def csf_expectation(int kind, double R, double alpha, double[::1] grid, double[:, ::1] samples):
    """Mean over each row of ``samples`` of zeta_a(grid point, sample); shape ``(n, G)``.

    ``kind`` is 1 for power and 2 for logit.
    """
    cdef Py_ssize_t n = samples.shape[0], m = samples.shape[1], G = grid.shape[0]
    cdef Py_ssize_t i, g, j
    cdef double acc, x
    out_arr = np.empty((n, G))
    cdef double[:, ::1] out = out_arr
    if kind != 1 and kind != 2:
        raise ValueError("kind must be 1 (power) or 2 (logit)")
    with nogil:
        for i in range(n):
            for g in range(G):
                x = grid[g]
                acc = 0.0
                if kind == 1:
                    for j in range(m):
                        acc += _power_a(x, samples[i, j], R, alpha)
                else:
                    for j in range(m):
                        acc += _logit_a(x, samples[i, j], R, alpha)
                out[i, g] = acc / m
    return out_arr
