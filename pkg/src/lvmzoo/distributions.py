"""Samplers and densities used by the model zoo.

All samplers take an explicit :class:`~lvmzoo.numerics.RngStream`; the
distribution objects themselves are immutable.
"""
from dataclasses import dataclass, field
from math import lgamma, log, pi, sqrt

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import gamma as gamma_fn

from . import _backend
from .numerics import as_spd, cholesky

LOG_2PI = log(2 * pi)


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MultivariateNormal:
    mean: np.ndarray
    covariance: np.ndarray
    _chol: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        mean = _readonly(np.atleast_1d(self.mean))
        cov = _readonly(as_spd(np.atleast_2d(self.covariance), "covariance"))
        if mean.shape != (cov.shape[0],):
            raise ValueError(
                f"mean has length {mean.shape[0]} but covariance is {cov.shape[0]}x{cov.shape[0]}"
            )
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "_chol", _readonly(cholesky(cov)))

    @property
    def dim(self):
        return self.mean.shape[0]


def mvn_sample(d, n, rng):
    """``n`` iid rows ``mean + L @ eps`` with ``L = cholesky(covariance)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    eps = rng.standard_normal((n, d.dim))
    return d.mean + eps @ d._chol.T


def mvn_logpdf(d, x):
    """Log-density at ``x`` (a vector, or rows of a matrix)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != d.dim:
        raise ValueError(f"expected vectors of length {d.dim}, got shape {x.shape}")
    diff = np.atleast_2d(x - d.mean)
    u = solve_triangular(d._chol, diff.T, lower=True)
    logdet = 2.0 * np.log(np.diag(d._chol)).sum()
    out = -0.5 * (d.dim * LOG_2PI + logdet + (u * u).sum(axis=0))
    return float(out[0]) if x.ndim == 1 else out


@dataclass(frozen=True)
class Dirichlet:
    """Dirichlet over the ``K``-simplex.

    Posteriors built by :func:`dirichlet_categorical_posterior` remember the
    original prior and the integer counts absorbed so far, and always form
    ``concentration = prior + total_counts`` in a single addition. Updating
    batch by batch therefore gives bit-identical results to one pooled update.
    """

    concentration: np.ndarray
    _prior: np.ndarray = field(init=False, repr=False, compare=False)
    _counts: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        alpha = _readonly(np.atleast_1d(self.concentration))
        if alpha.ndim != 1 or alpha.size < 1 or not np.all(alpha > 0):
            raise ValueError("concentration must be a vector of positive reals")
        object.__setattr__(self, "concentration", alpha)
        object.__setattr__(self, "_prior", alpha)
        object.__setattr__(self, "_counts", np.zeros(alpha.shape[0], dtype=np.int64))

    @classmethod
    def symmetric(cls, alpha, k):
        """The ``(alpha / K, ..., alpha / K)`` prior."""
        return cls(np.full(k, alpha / k))

    @property
    def k(self):
        return self.concentration.shape[0]

    def mean(self):
        return self.concentration / self.concentration.sum()

    def variance(self):
        a = self.concentration
        a0 = a.sum()
        return a * (a0 - a) / (a0**2 * (a0 + 1))


@dataclass(frozen=True)
class Categorical:
    probabilities: np.ndarray

    def __post_init__(self):
        p = _readonly(np.atleast_1d(self.probabilities))
        if np.any(p < 0) or np.any(p > 1) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must lie on the simplex")
        object.__setattr__(self, "probabilities", p)

    def sample(self, n, rng):
        """Category labels in ``1..K``."""
        return rng.choice(self.probabilities.shape[0], size=n, p=self.probabilities) + 1


def dirichlet_sample(d, rng, size=None):
    """Simplex draw(s) via normalized Gamma variates.

    Gammas are drawn in log space (``G_a = G_{a+1} U**(1/a)``) so tiny
    concentrations do not underflow to an all-zero row.
    """
    shape = (d.k,) if size is None else (size, d.k)
    a = d.concentration
    log_g = np.log(rng.gamma(a + 1.0, 1.0, size=shape)) + np.log(rng.uniform(size=shape)) / a
    log_g -= log_g.max(axis=-1, keepdims=True)
    g = np.exp(log_g)
    p = g / g.sum(axis=-1, keepdims=True)
    # normalization guard: push rounding residue onto the largest component
    resid = 1.0 - p.sum(axis=-1)
    idx = np.argmax(p, axis=-1)
    if size is None:
        p[idx] += resid
    else:
        p[np.arange(size), idx] += resid
    return np.clip(p, 0.0, 1.0)


def dirichlet_categorical_posterior(prior, counts):
    counts = np.asarray(counts)
    if counts.shape != (prior.k,):
        raise ValueError(f"counts must have length {prior.k}, got shape {counts.shape}")
    if np.any(counts < 0) or np.any(counts != np.round(counts)):
        raise ValueError("counts must be nonnegative integers")
    total = prior._counts + counts.astype(np.int64)
    post = Dirichlet(prior._prior + total)
    object.__setattr__(post, "_prior", prior._prior)
    object.__setattr__(post, "_counts", total)
    return post


@dataclass(frozen=True)
class GeneralizedGaussian:
    """Symmetric density proportional to ``exp(-|(x - location) / scale|**shape)``.

    ``shape=2`` is a normal with variance ``scale**2 / 2``; ``shape=1`` is Laplace.
    """

    shape: float
    scale: float = 1.0
    location: float = 0.0

    def __post_init__(self):
        if not self.shape > 0:
            raise ValueError("shape must be > 0")
        if not self.scale > 0:
            raise ValueError("scale must be > 0")

    @classmethod
    def unit_variance(cls, shape, location=0.0):
        return cls(shape, unit_variance_scale(shape), location)

    def variance(self):
        a = self.shape
        return self.scale**2 * gamma_fn(3 / a) / gamma_fn(1 / a)

    def excess_kurtosis(self):
        a = self.shape
        return gamma_fn(5 / a) * gamma_fn(1 / a) / gamma_fn(3 / a) ** 2 - 3.0

    def logpdf(self, x):
        a = self.shape
        z = np.abs((np.asarray(x, dtype=float) - self.location) / self.scale)
        return log(a) - log(2 * self.scale) - lgamma(1 / a) - z**a


def unit_variance_scale(shape):
    """Scale giving a generalized Gaussian of the given shape unit variance."""
    return sqrt(gamma_fn(1 / shape) / gamma_fn(3 / shape))


def gg_sample(d, n, rng):
    """Gamma transform: ``|x| = scale * G**(1/shape)``, ``G ~ Gamma(1/shape)``, random sign."""
    if n < 1:
        raise ValueError("n must be >= 1")
    g = rng.gamma(1.0 / d.shape, 1.0, size=n)
    sign = np.where(rng.uniform(size=n) < 0.5, -1.0, 1.0)
    return d.location + d.scale * sign * g ** (1.0 / d.shape)


@dataclass(frozen=True)
class StickBreakingDP:
    """Truncated stick-breaking Dirichlet process.

    The mass left after ``truncation`` sticks has expectation
    ``(alpha / (1 + alpha)) ** truncation``.
    """

    concentration: float
    truncation: int = 200
    base_sampler: object = None

    def __post_init__(self):
        if not self.concentration > 0:
            raise ValueError("concentration must be > 0")
        if self.truncation < 1:
            raise ValueError("truncation must be >= 1")

    def residual_bound(self):
        a = self.concentration
        return (a / (1 + a)) ** self.truncation

    def expected_weights(self):
        a = self.concentration
        k = np.arange(self.truncation)
        return (1 / (1 + a)) * (a / (1 + a)) ** k


def stick_breaking_weights(d, rng, size=None):
    """Weights ``w_k = v_k prod_{j<k}(1 - v_j)``, ``v_k ~ Beta(1, alpha)``."""
    rows = 1 if size is None else size
    v = rng.beta(1.0, d.concentration, size=(rows, d.truncation))
    w = _backend.stick_breaking(v)
    return w[0] if size is None else w


def sample_dp(d, rng):
    """One truncated DP realization: ``(weights, atoms)``.

    ``d.base_sampler(rng, n)`` must return ``n`` atoms.
    """
    if d.base_sampler is None:
        raise ValueError("StickBreakingDP has no base_sampler")
    w = stick_breaking_weights(d, rng)
    return w, d.base_sampler(rng, d.truncation)
