# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Fused single-pass evaluation of the Cox partial likelihood.

Walks the grouped event times in descending order while two pointers sweep
the stop-sorted and start-sorted subject arrays, maintaining running at-risk
sums. Semantics are identical to the NumPy fallback in ``kernels.py``; see
the array contract there.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport isfinite, log

cnp.import_array()


def cox_loglik(const double[::1] eta, const double[::1] w,
               const Py_ssize_t[::1] order_stop, const Py_ssize_t[::1] pos_stop,
               const Py_ssize_t[::1] order_start, const Py_ssize_t[::1] pos_start,
               const double[::1] d,
               const Py_ssize_t[::1] event_idx, const Py_ssize_t[::1] group_off,
               bint efron):
    cdef Py_ssize_t n = eta.shape[0]
    cdef Py_ssize_t m = d.shape[0]
    cdef Py_ssize_t i = n, j = n
    cdef Py_ssize_t k, g, l, gstart, gend, dk_int
    cdef double a0 = 0.0, b0 = 0.0
    cdef double s0, wd, denom, dk
    cdef double acc = 0.0

    for k in range(m - 1, -1, -1):
        while i > pos_stop[k]:
            i -= 1
            a0 += w[order_stop[i]]
        while j > pos_start[k]:
            j -= 1
            b0 += w[order_start[j]]
        s0 = a0 - b0
        gstart = group_off[k]
        gend = group_off[k + 1]
        dk = d[k]
        dk_int = gend - gstart
        for g in range(gstart, gend):
            acc += eta[event_idx[g]]
        if efron and dk_int > 1:
            wd = 0.0
            for g in range(gstart, gend):
                wd += w[event_idx[g]]
            for l in range(dk_int):
                denom = s0 - (l / dk) * wd
                if not (denom > 0.0 and isfinite(denom)):
                    return float("nan")
                acc -= log(denom)
        else:
            if not (s0 > 0.0 and isfinite(s0)):
                return float("nan")
            acc -= dk * log(s0)
    return acc


def cox_score_info(const double[::1] eta, const double[::1] w, const double[:, ::1] x,
                   const Py_ssize_t[::1] order_stop, const Py_ssize_t[::1] pos_stop,
                   const Py_ssize_t[::1] order_start, const Py_ssize_t[::1] pos_start,
                   const double[::1] d,
                   const Py_ssize_t[::1] event_idx, const Py_ssize_t[::1] group_off,
                   const double[:, ::1] sum_z_events, bint efron):
    cdef Py_ssize_t n = eta.shape[0]
    cdef Py_ssize_t p = x.shape[1]
    cdef Py_ssize_t m = d.shape[0]
    cdef Py_ssize_t i = n, j = n
    cdef Py_ssize_t k, g, l, a, b, idx, gstart, gend, dk_int
    cdef double ww, va, s0, wd, denom, dk, f, r1a
    cdef double ll = 0.0
    cdef bint bad = False

    grad_arr = np.zeros(p, dtype=np.float64)
    info_arr = np.zeros((p, p), dtype=np.float64)
    cdef double[::1] grad = grad_arr
    cdef double[:, ::1] info = info_arr
    cdef double[::1] acc1a = np.zeros(p, dtype=np.float64)
    cdef double[::1] acc1b = np.zeros(p, dtype=np.float64)
    cdef double[:, ::1] acc2a = np.zeros((p, p), dtype=np.float64)
    cdef double[:, ::1] acc2b = np.zeros((p, p), dtype=np.float64)
    cdef double[::1] s1 = np.zeros(p, dtype=np.float64)
    cdef double[:, ::1] s2 = np.zeros((p, p), dtype=np.float64)
    cdef double[::1] s1d = np.zeros(p, dtype=np.float64)
    cdef double[:, ::1] s2d = np.zeros((p, p), dtype=np.float64)
    cdef double[::1] v = np.zeros(p, dtype=np.float64)
    cdef double a0 = 0.0, b0 = 0.0

    for k in range(m - 1, -1, -1):
        while i > pos_stop[k]:
            i -= 1
            idx = order_stop[i]
            ww = w[idx]
            a0 += ww
            for a in range(p):
                va = ww * x[idx, a]
                acc1a[a] += va
                for b in range(a, p):
                    acc2a[a, b] += ww * (x[idx, a] * x[idx, b])
        while j > pos_start[k]:
            j -= 1
            idx = order_start[j]
            ww = w[idx]
            b0 += ww
            for a in range(p):
                va = ww * x[idx, a]
                acc1b[a] += va
                for b in range(a, p):
                    acc2b[a, b] += ww * (x[idx, a] * x[idx, b])
        s0 = a0 - b0
        for a in range(p):
            s1[a] = acc1a[a] - acc1b[a]
            for b in range(a, p):
                s2[a, b] = acc2a[a, b] - acc2b[a, b]

        gstart = group_off[k]
        gend = group_off[k + 1]
        dk = d[k]
        dk_int = gend - gstart
        for g in range(gstart, gend):
            ll += eta[event_idx[g]]
        for a in range(p):
            grad[a] += sum_z_events[k, a]

        if efron and dk_int > 1:
            wd = 0.0
            for a in range(p):
                s1d[a] = 0.0
                for b in range(a, p):
                    s2d[a, b] = 0.0
            for g in range(gstart, gend):
                idx = event_idx[g]
                ww = w[idx]
                wd += ww
                for a in range(p):
                    s1d[a] += ww * x[idx, a]
                    for b in range(a, p):
                        s2d[a, b] += ww * (x[idx, a] * x[idx, b])
            for l in range(dk_int):
                f = l / dk
                denom = s0 - f * wd
                if not (denom > 0.0 and isfinite(denom)):
                    bad = True
                    break
                ll -= log(denom)
                for a in range(p):
                    v[a] = (s1[a] - f * s1d[a]) / denom
                    grad[a] -= v[a]
                for a in range(p):
                    for b in range(a, p):
                        info[a, b] += (s2[a, b] - f * s2d[a, b]) / denom - v[a] * v[b]
            if bad:
                break
        else:
            if not (s0 > 0.0 and isfinite(s0)):
                bad = True
                break
            ll -= dk * log(s0)
            for a in range(p):
                v[a] = s1[a] / s0
                grad[a] -= dk * v[a]
            for a in range(p):
                r1a = v[a]
                for b in range(a, p):
                    info[a, b] += dk * (s2[a, b] / s0 - r1a * v[b])

    if bad:
        grad_arr.fill(np.nan)
        info_arr.fill(np.nan)
        return float("nan"), grad_arr, info_arr

    for a in range(p):
        for b in range(a + 1, p):
            info[b, a] = info[a, b]
    return ll, grad_arr, info_arr
