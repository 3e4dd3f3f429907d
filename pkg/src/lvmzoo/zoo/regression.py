"""Reduced rank regression and the clustered (hierarchical) regression sampler."""
from dataclasses import dataclass

import numpy as np

from ..errors import SpecError
from ..numerics import cholesky
from .base import Serializable, integers, matrix, vector


def reduce_rank_regression(B_full, d):
    """Best rank-``d`` factorization ``B_full ~ W @ D`` in Frobenius norm.

    Truncated SVD with ``W = U_d S_d^{1/2}`` and ``D = S_d^{1/2} V_d'``.
    The factors are only defined up to ``W -> W G``, ``D -> G^{-1} D``; this
    gauge splits the singular values evenly and makes the largest-magnitude
    entry of each column of ``W`` positive.

    Parameters
    ----------
    B_full : array, shape (P, M)
    d : int
        Target rank, ``1 <= d < min(P, M)``.

    Returns
    -------
    W : array, shape (P, d)
    D : array, shape (d, M)
    """
    B_full = np.asarray(B_full, dtype=float)
    if B_full.ndim != 2:
        raise ValueError("B_full must be a matrix")
    p, m = B_full.shape
    if not 1 <= d < min(p, m):
        raise ValueError(f"rank d must satisfy 1 <= d < min(P, M) = {min(p, m)}, got {d}")
    u, s, vt = np.linalg.svd(B_full, full_matrices=False)
    u, s, vt = u[:, :d], s[:d], vt[:d]
    pivots = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[pivots, np.arange(d)])
    signs[signs == 0] = 1.0
    root = np.sqrt(s)
    W = u * signs * root
    D = (vt * signs[:, None]) * root[:, None]
    return W, D


@dataclass(frozen=True, eq=False)
class HierarchicalRegression(Serializable):
    """Per-cluster coefficients drawn from a fixed normal hyperprior.

    ``y_{n,p} = beta_{j(n),p}' x_n + eps``, ``eps ~ N(0, sigma2_p)``,
    ``beta_{j,p} ~ N(beta_mean, beta_cov)``. Hyperparameters are fixed.
    """

    X: np.ndarray = matrix()
    clusters: tuple = integers()
    beta_mean: np.ndarray = vector()
    beta_cov: np.ndarray = matrix()
    sigma2: np.ndarray = vector()

    def validate(self):
        n, m = self.X.shape
        if len(self.clusters) != n:
            raise SpecError("clusters", f"expected {n} labels, got {len(self.clusters)}")
        if self.beta_mean.shape != (m,):
            raise SpecError("beta_mean", f"expected length {m}")
        if self.beta_cov.shape != (m, m):
            raise SpecError("beta_cov", f"expected {m}x{m}")
        if np.any(self.sigma2 <= 0):
            raise SpecError("sigma2", "must be > 0")

    @property
    def cluster_labels(self):
        return sorted(set(self.clusters))


def sample_hierarchical_regression(spec, rng):
    """Return ``(betas, Y)``; ``betas[j, p]`` is the coefficient of cluster ``j``, response ``p``."""
    labels = spec.cluster_labels
    index = {lab: j for j, lab in enumerate(labels)}
    rows = np.array([index[c] for c in spec.clusters])
    J, P, M = len(labels), spec.sigma2.shape[0], spec.X.shape[1]
    L = cholesky(spec.beta_cov)
    betas = spec.beta_mean + rng.standard_normal((J, P, M)) @ L.T
    mean = np.einsum("nm,npm->np", spec.X, betas[rows])
    Y = mean + rng.standard_normal((spec.X.shape[0], P)) * np.sqrt(spec.sigma2)
    return betas, Y
