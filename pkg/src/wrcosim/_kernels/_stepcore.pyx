# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled lane for the dense stepping kernels.

Plain partial-pivot LU plus the implicit-Euler descriptor sweep, written as
tight C loops over typed memoryviews. Systems here are desk-scale (well under
100 unknowns) but stepped tens of thousands of times, so per-step overhead is
what matters.
"""

import numpy as np

NAME = "compiled"


cdef int _factor(double[:, ::1] lu, long long[::1] piv) except -1:
    cdef Py_ssize_t n = lu.shape[0]
    cdef Py_ssize_t i, j, k, p
    cdef double big, tmp, pivval
    for k in range(n):
        p = k
        big = lu[k, k] if lu[k, k] >= 0 else -lu[k, k]
        for i in range(k + 1, n):
            tmp = lu[i, k] if lu[i, k] >= 0 else -lu[i, k]
            if tmp > big:
                big = tmp
                p = i
        if lu[p, k] == 0.0:
            raise np.linalg.LinAlgError(
                f"singular matrix: zero pivot at column {k}"
            )
        piv[k] = p
        if p != k:
            for j in range(n):
                tmp = lu[k, j]
                lu[k, j] = lu[p, j]
                lu[p, j] = tmp
        pivval = lu[k, k]
        for i in range(k + 1, n):
            lu[i, k] /= pivval
            tmp = lu[i, k]
            for j in range(k + 1, n):
                lu[i, j] -= tmp * lu[k, j]
    return 0


cdef void _solve(double[:, ::1] lu, long long[::1] piv, double[::1] x) noexcept:
    cdef Py_ssize_t n = lu.shape[0]
    cdef Py_ssize_t i, k, p
    cdef double acc
    for k in range(n):
        p = piv[k]
        if p != k:
            acc = x[k]
            x[k] = x[p]
            x[p] = acc
    for k in range(n):
        for i in range(k + 1, n):
            x[i] -= lu[i, k] * x[k]
    for k in range(n - 1, -1, -1):
        acc = x[k]
        for i in range(k + 1, n):
            acc -= lu[k, i] * x[i]
        x[k] = acc / lu[k, k]


def lu_factor(a):
    """Factor a square matrix with partial pivoting, PA = LU."""
    lu = np.array(a, dtype=np.float64, order="C", copy=True)
    piv = np.zeros(lu.shape[0], dtype=np.int64)
    _factor(lu, piv)
    return lu, piv


def lu_solve(lu, piv, b):
    """Solve A x = b given a factorization from :func:`lu_factor`."""
    x = np.array(b, dtype=np.float64, copy=True)
    _solve(lu, piv, x)
    return x


def descriptor_sweep(e_dt, m_mat, b_steps, z0):
    """Implicit-Euler sweep: M z[n+1] = (E/dt) z[n] + b[n+1], constant M."""
    cdef double[:, ::1] lu
    cdef long long[::1] piv
    lu_arr = np.array(m_mat, dtype=np.float64, order="C", copy=True)
    piv_arr = np.zeros(lu_arr.shape[0], dtype=np.int64)
    lu = lu_arr
    piv = piv_arr
    _factor(lu, piv)

    ed = np.ascontiguousarray(e_dt, dtype=np.float64)
    bs = np.ascontiguousarray(b_steps, dtype=np.float64)
    cdef double[:, ::1] edv = ed
    cdef double[:, ::1] bv = bs
    cdef Py_ssize_t m = bv.shape[0]
    cdef Py_ssize_t n = edv.shape[0]

    z_arr = np.empty((m + 1, n), dtype=np.float64)
    cdef double[:, ::1] z = z_arr
    cdef double[::1] z0v = np.ascontiguousarray(z0, dtype=np.float64)
    cdef double[::1] rhs = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t s, i, j
    cdef double acc

    for i in range(n):
        z[0, i] = z0v[i]
    for s in range(m):
        for i in range(n):
            acc = bv[s, i]
            for j in range(n):
                acc += edv[i, j] * z[s, j]
            rhs[i] = acc
        _solve(lu, piv, rhs)
        for i in range(n):
            z[s + 1, i] = rhs[i]
    return z_arr
