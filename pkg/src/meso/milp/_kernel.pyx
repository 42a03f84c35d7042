# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled simplex kernels.  Same signatures and results as ``_kernel_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, INFINITY

cnp.import_array()

DEF AT_LOWER = 0
DEF AT_UPPER = 1


def pivot(double[:, ::1] T, Py_ssize_t r, Py_ssize_t j):
    cdef Py_ssize_t m = T.shape[0], n = T.shape[1], i, k
    cdef double p = T[r, j], f
    cdef double[::1] row = T[r]
    for k in range(n):
        row[k] /= p
    for i in range(m):
        if i == r:
            continue
        f = T[i, j]
        if f == 0.0:
            continue
        for k in range(n):
            if row[k] != 0.0:
                T[i, k] -= f * row[k]
        T[i, j] = 0.0


def price(double[::1] d, cnp.int8_t[::1] status, cnp.uint8_t[::1] allowed, double tol, bint bland):
    cdef Py_ssize_t n = d.shape[0], k, best = -1
    cdef double g, bestg = tol
    for k in range(n):
        if not allowed[k]:
            continue
        if status[k] == AT_LOWER:
            g = -d[k]
        elif status[k] == AT_UPPER:
            g = d[k]
        else:
            continue
        if g > bestg:
            if bland:
                return k
            bestg = g
            best = k
    return best


def ratio_test(double[::1] col, double[::1] beta, double[::1] ub_basic, cnp.int64_t[::1] basis,
               int direction, double tol, bint bland):
    cdef Py_ssize_t m = col.shape[0], i, r = -1
    cdef double a, s, best = INFINITY, besta = 0.0
    cdef double[::1] step = np.empty(m)
    for i in range(m):
        a = col[i] * direction
        if a > tol:
            s = beta[i] if beta[i] > 0.0 else 0.0
            step[i] = s / a
        elif a < -tol and ub_basic[i] < INFINITY:
            s = ub_basic[i] - beta[i]
            if s < 0.0:
                s = 0.0
            step[i] = s / -a
        else:
            step[i] = INFINITY
        if step[i] < best:
            best = step[i]
    if best == INFINITY:
        return -1, INFINITY, False
    for i in range(m):
        if step[i] > best + 1e-12:
            continue
        a = fabs(col[i])
        if r < 0:
            r, besta = i, a
        elif bland:
            if basis[i] < basis[r]:
                r, besta = i, a
        elif a > besta:
            r, besta = i, a
    return r, step[r], (col[r] * direction) < 0
