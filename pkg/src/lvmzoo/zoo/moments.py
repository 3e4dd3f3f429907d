"""Closed-form mean and covariance of the observations for linear-Gaussian specs."""
from dataclasses import dataclass
from functools import singledispatch

import numpy as np
from scipy.linalg import block_diag, solve_discrete_lyapunov

from ..errors import SpecError
from ..numerics import as_spd, kron, symmetrize
from .specs import (
    FA,
    ICA,
    PPCA,
    Airy,
    Gsca,
    Lisrel,
    MatrixNormal,
    MultiViewSpec,
    TemporalLinearGaussian,
)


@dataclass(frozen=True)
class ImpliedMoments:
    """Observation mean and covariance implied by a spec.

    ``degenerate`` marks a covariance that is only positive semidefinite
    (the PCA limit, noiseless ICA). ``non_gaussian`` marks a covariance-only
    result: the marginal has these moments but is not normal.
    """

    mean: np.ndarray
    covariance: np.ndarray
    degenerate: bool = False
    non_gaussian: bool = False

    def __post_init__(self):
        cov = symmetrize(self.covariance)
        if not self.degenerate:
            cov = as_spd(cov, "implied covariance")
        mean = np.array(self.mean, dtype=float)
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    def to_dict(self):
        return {
            "mean": self.mean.tolist(),
            "covariance": self.covariance.tolist(),
            "degenerate": self.degenerate,
            "non_gaussian": self.non_gaussian,
        }


@singledispatch
def implied_moments(spec):
    """Closed-form :class:`ImpliedMoments` of ``spec``.

    Raises ``TypeError`` for models without closed-form Gaussian moments.
    """
    raise TypeError(f"no closed-form implied moments for model {getattr(spec, 'model', type(spec).__name__)!r}")


@implied_moments.register
def _(spec: PPCA):
    cov = spec.W @ spec.W.T + spec.sigma2 * np.eye(spec.obs_dim)
    return ImpliedMoments(spec.mean_vector(), cov, degenerate=spec.pca_limit)


@implied_moments.register
def _(spec: FA):
    cov = spec.W @ spec.W.T + np.diag(spec.sigma2)
    return ImpliedMoments(spec.mean_vector(), cov)


@implied_moments.register
def _(spec: ICA):
    # sources have unit variance, so only W W' + noise survives
    cov = spec.W @ spec.W.T + np.diag(spec.noise_variances())
    return ImpliedMoments(
        spec.mean_vector(),
        cov,
        degenerate=spec.noiseless,
        non_gaussian=bool(np.any(spec.shapes != 2.0)),
    )


@implied_moments.register
def _(spec: MultiViewSpec):
    W = spec.stacked_loadings()
    cov = W @ W.T + spec.noise_covariance()
    return ImpliedMoments(np.zeros(spec.obs_dim), cov)


def lisrel_latent_covariance(spec):
    """Joint covariance of ``(z1, z2)`` with ``z2 = B^{-1}(C z1 + xi)``."""
    phi = np.diag(spec.phi_z1)
    # B^{-1} C and B^{-1} via LU solves
    b_inv_c = np.linalg.solve(spec.B, spec.C)
    b_inv = np.linalg.solve(spec.B, np.eye(spec.B.shape[0]))
    cov_z2 = b_inv_c @ phi @ b_inv_c.T + b_inv @ np.diag(spec.phi_xi) @ b_inv.T
    cov_12 = phi @ b_inv_c.T
    return np.block([[phi, cov_12], [cov_12.T, cov_z2]])


@implied_moments.register
def _(spec: Lisrel):
    if np.linalg.matrix_rank(spec.B) < spec.B.shape[0]:
        raise SpecError("B", "must be nonsingular")
    W = block_diag(spec.W1, spec.W2)
    cov = W @ lisrel_latent_covariance(spec) @ W.T + np.diag(np.concatenate([spec.psi1, spec.psi2]))
    return ImpliedMoments(np.zeros(spec.obs_dim), cov)


@implied_moments.register
def _(spec: Gsca):
    mean = np.zeros(spec.obs_dim) if spec.mean is None else spec.mean
    return ImpliedMoments(mean, spec.observation_cov)


@implied_moments.register
def _(spec: MatrixNormal):
    # row-major flattening of Y
    return ImpliedMoments(spec.M.reshape(-1), kron(spec.Sigma, spec.Omega))


@implied_moments.register
def _(spec: Airy):
    p = spec.repeats
    cov = spec.sigma2_z * np.ones((p, p)) + spec.sigma2_eps * np.eye(p)
    return ImpliedMoments(np.full(p, spec.mu), cov)


def stationary_state_covariance(spec):
    """Solution of ``P = A P A' + Q``."""
    if spec.spectral_radius() >= 1.0:
        raise SpecError("A", "spectral radius >= 1: no stationary distribution")
    return symmetrize(solve_discrete_lyapunov(spec.A, spec.Q), rtol=1e-8)


@implied_moments.register
def _(spec: TemporalLinearGaussian):
    """Stationary marginal of a single ``y_t``."""
    P = stationary_state_covariance(spec)
    cov = spec.H @ P @ spec.H.T + spec.R
    degenerate = np.linalg.eigvalsh(symmetrize(cov, rtol=1e-8)).min() <= 0
    return ImpliedMoments(np.zeros(spec.obs_dim), symmetrize(cov, rtol=1e-8), degenerate=bool(degenerate))
