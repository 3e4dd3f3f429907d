# cython: language_level=3
"""Compiled inner loops.

Every function here has a pure-Python twin in ``_pykernels`` with the same
signature and semantics; ``_backend`` picks one at import time.
"""
import numpy as np

from libc.math cimport sqrt


def cholesky_lower(const double[:, ::1] a):
    """Lower Cholesky factor of a symmetric matrix.

    Returns ``(L, pivot)``; ``pivot`` is -1 on success, otherwise the index
    of the first non-positive pivot (``L`` is then partially filled).
    """
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double s
    out = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] L = out
    for j in range(n):
        s = a[j, j]
        for k in range(j):
            s -= L[j, k] * L[j, k]
        if not s > 0.0:
            return out, j
        L[j, j] = sqrt(s)
        for i in range(j + 1, n):
            s = a[i, j]
            for k in range(j):
                s -= L[i, k] * L[j, k]
            L[i, j] = s / L[j, j]
    return out, -1


def linear_gaussian_rollout(const double[:, ::1] A, const double[::1] z0, const double[:, ::1] eta):
    """States ``z_0 = z0`` and ``z_t = A z_{t-1} + eta_{t-1}`` for t >= 1.

    ``eta`` has shape (T - 1, D); the result has shape (T, D).
    """
    cdef Py_ssize_t steps = eta.shape[0]
    cdef Py_ssize_t d = A.shape[0]
    cdef Py_ssize_t t, i, j
    cdef double s
    out = np.empty((steps + 1, d), dtype=np.float64)
    cdef double[:, ::1] Z = out
    for i in range(d):
        Z[0, i] = z0[i]
    for t in range(1, steps + 1):
        for i in range(d):
            s = eta[t - 1, i]
            for j in range(d):
                s += A[i, j] * Z[t - 1, j]
            Z[t, i] = s
    return out


def iaf_affine_forward(const double[:, ::1] eps, const double[::1] shift,
                       const double[:, ::1] lower, const double[::1] scale):
    """Row-wise ``z_d = shift_d + sum_{j<d} lower[d, j] z_j + scale_d eps_d``."""
    cdef Py_ssize_t n = eps.shape[0]
    cdef Py_ssize_t D = eps.shape[1]
    cdef Py_ssize_t r, d, j
    cdef double s
    out = np.empty((n, D), dtype=np.float64)
    cdef double[:, ::1] z = out
    for r in range(n):
        for d in range(D):
            s = shift[d] + scale[d] * eps[r, d]
            for j in range(d):
                s += lower[d, j] * z[r, j]
            z[r, d] = s
    return out


def iaf_affine_inverse(const double[:, ::1] z, const double[::1] shift,
                       const double[:, ::1] lower, const double[::1] scale):
    """Row-wise inverse of :func:`iaf_affine_forward`."""
    cdef Py_ssize_t n = z.shape[0]
    cdef Py_ssize_t D = z.shape[1]
    cdef Py_ssize_t r, d, j
    cdef double s
    out = np.empty((n, D), dtype=np.float64)
    cdef double[:, ::1] e = out
    for r in range(n):
        for d in range(D):
            s = z[r, d] - shift[d]
            for j in range(d):
                s -= lower[d, j] * z[r, j]
            e[r, d] = s / scale[d]
    return out


def stick_breaking(const double[:, ::1] v):
    """Row-wise stick-breaking weights ``w_k = v_k prod_{j<k} (1 - v_j)``."""
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t T = v.shape[1]
    cdef Py_ssize_t r, k
    cdef double rest
    out = np.empty((n, T), dtype=np.float64)
    cdef double[:, ::1] w = out
    for r in range(n):
        rest = 1.0
        for k in range(T):
            w[r, k] = v[r, k] * rest
            rest *= 1.0 - v[r, k]
    return out
