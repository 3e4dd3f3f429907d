"""Ancestral samplers: latents from the prior, observations from the conditional."""
from dataclasses import dataclass, field
from functools import singledispatch

import numpy as np

from .. import _backend
from ..distributions import Dirichlet, GeneralizedGaussian, dirichlet_sample, gg_sample
from ..errors import NotPositiveDefiniteError, SpecError
from ..numerics import cholesky, symmetrize
from .moments import stationary_state_covariance
from .specs import (
    FA,
    ICA,
    PPCA,
    Airy,
    DirichletCategorical,
    Gsca,
    Lisrel,
    MatrixNormal,
    MultiViewSpec,
    TemporalLinearGaussian,
    Tobit,
)


@dataclass(frozen=True)
class SampleBatch:
    """Paired latent and observation draws from one generative run.

    ``meta`` holds model-specific extras (layer sizes, censoring, ...).
    """

    latents: np.ndarray
    observations: np.ndarray
    seed: int
    fingerprint: str
    model: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.latents.shape[0] != self.observations.shape[0]:
            raise ValueError(
                f"latents have {self.latents.shape[0]} rows, observations {self.observations.shape[0]}"
            )

    @property
    def n(self):
        return self.observations.shape[0]

    def matches(self, spec):
        return self.fingerprint == spec.fingerprint()


def _batch(spec, rng, latents, observations, **meta):
    latents = np.asarray(latents, dtype=float)
    if latents.ndim == 1:
        latents = latents[:, None]
    return SampleBatch(latents, np.asarray(observations, dtype=float), rng.seed, spec.fingerprint(), spec.model, meta)


def psd_sqrt(cov):
    """A factor ``F`` with ``F @ F.T == cov``; Cholesky when possible, else eigen."""
    try:
        return cholesky(cov)
    except NotPositiveDefiniteError:
        vals, vecs = np.linalg.eigh(symmetrize(cov, rtol=1e-8))
        return vecs * np.sqrt(np.clip(vals, 0.0, None))


def _check_n(n):
    if n < 1:
        raise ValueError("n must be >= 1")


@singledispatch
def sample_lvm(spec, n, rng):
    """Draw ``n`` paired ``(z, y)`` rows from ``spec``; returns a :class:`SampleBatch`."""
    raise TypeError(f"no sampler for {type(spec).__name__}")


def _diag_noise(rng, n, variances):
    return rng.standard_normal((n, variances.shape[0])) * np.sqrt(variances)


@sample_lvm.register
def _(spec: PPCA, n, rng):
    _check_n(n)
    if spec.pca_limit:
        raise SpecError("sigma2", "sigma2 = 0 is the PCA limit; it has implied moments but no sampler")
    z = rng.standard_normal((n, spec.latent_dim))
    y = spec.mean_vector() + z @ spec.W.T + _diag_noise(rng, n, spec.noise_variances())
    return _batch(spec, rng, z, y)


@sample_lvm.register
def _(spec: FA, n, rng):
    _check_n(n)
    z = rng.standard_normal((n, spec.latent_dim))
    y = spec.mean_vector() + z @ spec.W.T + _diag_noise(rng, n, spec.sigma2)
    return _batch(spec, rng, z, y)


@sample_lvm.register
def _(spec: ICA, n, rng):
    _check_n(n)
    z = np.column_stack([gg_sample(GeneralizedGaussian.unit_variance(a), n, rng) for a in spec.shapes])
    y = spec.mean_vector() + z @ spec.W.T
    if not spec.noiseless:
        y = y + _diag_noise(rng, n, spec.sigma2)
    return _batch(spec, rng, z, y)


@sample_lvm.register
def _(spec: MultiViewSpec, n, rng):
    _check_n(n)
    z = rng.standard_normal((n, spec.latent_dim))
    views = []
    for w, noise in zip(spec.loadings, spec.noise_blocks()):
        eps = rng.standard_normal((n, w.shape[0])) @ cholesky(noise).T
        views.append(z @ w.T + eps)
    return _batch(spec, rng, z, np.hstack(views), view_dims=list(spec.view_dims))


@sample_lvm.register
def _(spec: Lisrel, n, rng):
    _check_n(n)
    p1, p2, d1, d2 = spec.dims
    z1 = rng.standard_normal((n, d1)) * np.sqrt(spec.phi_z1)
    xi = rng.standard_normal((n, d2)) * np.sqrt(spec.phi_xi)
    # B z2 = C z1 + xi, solved by LU for every row at once
    z2 = np.linalg.solve(spec.B, (z1 @ spec.C.T + xi).T).T
    y1 = z1 @ spec.W1.T + _diag_noise(rng, n, spec.psi1)
    y2 = z2 @ spec.W2.T + _diag_noise(rng, n, spec.psi2)
    return _batch(
        spec, rng, np.hstack([z1, z2]), np.hstack([y1, y2]),
        latent_blocks=[d1, d2], condition_number=spec.condition_number(),
    )


@sample_lvm.register
def _(spec: Gsca, n, rng):
    _check_n(n)
    mean = np.zeros(spec.obs_dim) if spec.mean is None else spec.mean
    y = mean + rng.standard_normal((n, spec.obs_dim)) @ cholesky(spec.observation_cov).T
    return _batch(spec, rng, y @ spec.W.T, y)


@sample_lvm.register
def _(spec: MatrixNormal, n, rng):
    _check_n(n)
    rows, cols = spec.M.shape
    a = cholesky(spec.Sigma)
    b = cholesky(spec.Omega)
    z = rng.standard_normal((n, rows, cols))
    y = spec.M + a @ z @ b.T
    return _batch(spec, rng, np.empty((n, 0)), y.reshape(n, rows * cols), shape=[rows, cols])


def sample_tobit(spec, n, rng):
    """Return ``(y_star, y)``, both ``n x len(x)``, with ``y = max(0, y_star)``."""
    _check_n(n)
    y_star = spec.beta * spec.x + np.sqrt(spec.sigma2) * rng.standard_normal((n, spec.obs_dim))
    return y_star, np.maximum(0.0, y_star)


@sample_lvm.register
def _(spec: Tobit, n, rng):
    y_star, y = sample_tobit(spec, n, rng)
    return _batch(spec, rng, y_star, y, censored_fraction=(y == 0).mean(axis=0).tolist())


@sample_lvm.register
def _(spec: Airy, n, rng):
    _check_n(n)
    z = np.sqrt(spec.sigma2_z) * rng.standard_normal(n)
    y = spec.mu + z[:, None] + np.sqrt(spec.sigma2_eps) * rng.standard_normal((n, spec.repeats))
    return _batch(spec, rng, z, y)


def sample_temporal(spec, horizon, rng):
    """Roll the state-space model forward ``horizon`` steps.

    The first state comes from ``(initial_mean, initial_cov)`` or, when
    ``initial_cov`` is absent, from the stationary law.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    d = spec.latent_dim
    m0 = np.zeros(d) if spec.initial_mean is None else spec.initial_mean
    p0 = stationary_state_covariance(spec) if spec.initial_cov is None else spec.initial_cov
    z0 = m0 + psd_sqrt(p0) @ rng.standard_normal(d)
    eta = rng.standard_normal((horizon - 1, d)) @ cholesky(spec.Q).T
    z = _backend.linear_gaussian_rollout(spec.A, z0, eta)
    y = z @ spec.H.T
    if np.any(spec.R != 0):
        y = y + rng.standard_normal((horizon, spec.obs_dim)) @ psd_sqrt(spec.R).T
    return _batch(spec, rng, z, y, time_indexed=True, spectral_radius=spec.spectral_radius())


@sample_lvm.register
def _(spec: TemporalLinearGaussian, n, rng):
    return sample_temporal(spec, n, rng)


@sample_lvm.register
def _(spec: DirichletCategorical, n, rng):
    _check_n(n)
    p = dirichlet_sample(Dirichlet(spec.alpha), rng, size=n)
    counts = rng.multinomial(spec.draws, p)
    return _batch(spec, rng, p, counts)
