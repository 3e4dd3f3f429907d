"""Pure-Python versions of the compiled kernels in ``_kernels.pyx``.

Same signatures, same results (up to floating-point summation order).
"""
import math

import numpy as np


def cholesky_lower(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    n = a.shape[0]
    L = np.zeros((n, n))
    for j in range(n):
        s = a[j, j] - L[j, :j] @ L[j, :j]
        if not s > 0.0:
            return L, j
        L[j, j] = math.sqrt(s)
        if j + 1 < n:
            L[j + 1:, j] = (a[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L, -1


def linear_gaussian_rollout(A, z0, eta):
    A = np.asarray(A, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    Z = np.empty((eta.shape[0] + 1, A.shape[0]))
    Z[0] = z0
    prev = Z[0]
    for t in range(eta.shape[0]):
        prev = A @ prev + eta[t]
        Z[t + 1] = prev
    return Z


def iaf_affine_forward(eps, shift, lower, scale):
    eps = np.asarray(eps, dtype=np.float64)
    z = np.empty_like(eps)
    for d in range(eps.shape[1]):
        z[:, d] = shift[d] + scale[d] * eps[:, d] + z[:, :d] @ lower[d, :d]
    return z


def iaf_affine_inverse(z, shift, lower, scale):
    z = np.asarray(z, dtype=np.float64)
    eps = np.empty_like(z)
    for d in range(z.shape[1]):
        eps[:, d] = (z[:, d] - shift[d] - z[:, :d] @ lower[d, :d]) / scale[d]
    return eps


def stick_breaking(v):
    v = np.asarray(v, dtype=np.float64)
    w = np.empty_like(v)
    rest = np.ones(v.shape[0])
    for k in range(v.shape[1]):
        w[:, k] = v[:, k] * rest
        rest = rest * (1.0 - v[:, k])
    return w
