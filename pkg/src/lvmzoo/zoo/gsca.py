"""Residuals of the generalized structured component model."""
import numpy as np


def gsca_residual(spec, y):
    """Return ``(eps, xi)`` with ``eps = y - C W y`` and ``xi = W y - B W y``.

    Works on one observation vector or on the rows of a matrix.
    """
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != spec.obs_dim:
        raise ValueError(f"expected observations of length {spec.obs_dim}, got shape {y.shape}")
    z = y @ spec.W.T
    return y - z @ spec.C.T, z - z @ spec.B.T


def gsca_stacked_sides(spec, y):
    """Both sides of ``[I; W] y = [C; B] W y + [eps; xi]`` for a single ``y``."""
    y = np.asarray(y, dtype=float)
    eps, xi = gsca_residual(spec, y)
    z = spec.W @ y
    lhs = np.concatenate([y, z])
    rhs = np.concatenate([spec.C @ z, spec.B @ z]) + np.concatenate([eps, xi])
    return lhs, rhs


def gsca_residual_covariances(spec):
    """Covariances of ``eps`` and ``xi`` under ``y ~ N(mean, observation_cov)``."""
    a = np.eye(spec.obs_dim) - spec.C @ spec.W
    b = (np.eye(spec.latent_dim) - spec.B) @ spec.W
    s = spec.observation_cov
    return a @ s @ a.T, b @ s @ b.T
