# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops; see ``_kernels_py`` for the contract."""

import numpy as np
from libc.math cimport sqrt, INFINITY


def affine_iterate(A, b, X, long n):
    cdef const double[:, ::1] Am = np.ascontiguousarray(A, dtype=np.float64)
    cdef const double[::1] bm = np.ascontiguousarray(b, dtype=np.float64)
    out = np.array(X, dtype=np.float64, order="C", ndmin=2)
    cdef double[:, ::1] Xm = out
    cdef Py_ssize_t d = Am.shape[0]
    cdef Py_ssize_t rows = Xm.shape[0]
    cdef double[::1] cur = np.empty(d)
    cdef double[::1] nxt = np.empty(d)
    cdef Py_ssize_t r, i, j
    cdef long k
    cdef double acc
    for r in range(rows):
        for i in range(d):
            cur[i] = Xm[r, i]
        for k in range(n):
            for i in range(d):
                acc = 0.0
                for j in range(d):
                    acc += Am[i, j] * cur[j]
                nxt[i] = acc + bm[i]
            for i in range(d):
                cur[i] = nxt[i]
        for i in range(d):
            Xm[r, i] = cur[i]
    return out


def pair_norms(X, I, J):
    cdef const double[:, ::1] Xm = np.ascontiguousarray(X, dtype=np.float64)
    cdef const Py_ssize_t[::1] Im = np.ascontiguousarray(I, dtype=np.intp)
    cdef const Py_ssize_t[::1] Jm = np.ascontiguousarray(J, dtype=np.intp)
    cdef Py_ssize_t npairs = Im.shape[0]
    cdef Py_ssize_t d = Xm.shape[1]
    out = np.empty(npairs)
    cdef double[::1] om = out
    cdef Py_ssize_t k, c
    cdef double acc, t
    for k in range(npairs):
        acc = 0.0
        for c in range(d):
            t = Xm[Im[k], c] - Xm[Jm[k], c]
            acc += t * t
        om[k] = sqrt(acc)
    return out


def ratio_max(num, den, double guard):
    cdef const double[::1] nm = np.ascontiguousarray(num, dtype=np.float64)
    cdef const double[::1] dm = np.ascontiguousarray(den, dtype=np.float64)
    cdef Py_ssize_t k, best = -1
    cdef long skipped = 0
    cdef double r, top = -INFINITY
    for k in range(nm.shape[0]):
        if not dm[k] >= guard:
            skipped += 1
            continue
        r = nm[k] / dm[k]
        if best < 0 or r > top:
            top = r
            best = k
    if best < 0:
        return 0.0, -1, skipped
    return top, best, skipped


def linear_envelope(double a1, alpha, b):
    cdef const double[::1] am = np.ascontiguousarray(alpha, dtype=np.float64)
    cdef const double[::1] bm = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t k, n = am.shape[0]
    out = np.empty(n + 1)
    cdef double[::1] om = out
    cdef double a = a1
    om[0] = a
    for k in range(n):
        a = (1.0 + am[k]) * a + bm[k]
        om[k + 1] = a
    return out
