"""Low-rank ARD prior over group-specific loading columns."""
from dataclasses import dataclass

import numpy as np

from ..errors import SpecError
from .base import Serializable, matrix, scalar, vector
from .specs import GFA


@dataclass(frozen=True, eq=False)
class ArdPrior(Serializable):
    """``log(alpha) = U V' + mu_u 1' + 1 mu_v'`` for a ``G x D`` precision grid.

    Column ``d`` of view ``g`` is drawn as ``N(0, alpha[g, d]^{-1} I)``; large
    ``alpha`` switches the column off for that view.
    """

    U: np.ndarray = matrix()
    V: np.ndarray = matrix()
    mu_u: np.ndarray = vector()
    mu_v: np.ndarray = vector()
    lam: float = scalar(0.1)

    def validate(self):
        g, r = self.U.shape
        d = self.V.shape[0]
        if self.V.shape[1] != r:
            raise SpecError("V", f"expected {r} columns to match U, got {self.V.shape[1]}")
        if r > min(g, d):
            raise SpecError("U", f"rank R={r} exceeds min(G, D)={min(g, d)}")
        if self.mu_u.shape != (g,):
            raise SpecError("mu_u", f"expected length {g}")
        if self.mu_v.shape != (d,):
            raise SpecError("mu_v", f"expected length {d}")
        if not self.lam > 0:
            raise SpecError("lam", "must be > 0")

    @property
    def n_groups(self):
        return self.U.shape[0]

    @property
    def latent_dim(self):
        return self.V.shape[0]

    def log_precision(self):
        return self.U @ self.V.T + self.mu_u[:, None] + self.mu_v[None, :]

    def precision(self):
        return np.exp(self.log_precision())


def draw_ard_prior(n_groups, latent_dim, rank, rng, lam=0.1, mu_u=None, mu_v=None):
    """Draw ``U`` and ``V`` entries iid ``N(0, 1 / lam)``."""
    sd = 1.0 / np.sqrt(lam)
    U = sd * rng.standard_normal((n_groups, rank))
    V = sd * rng.standard_normal((latent_dim, rank))
    mu_u = np.zeros(n_groups) if mu_u is None else mu_u
    mu_v = np.zeros(latent_dim) if mu_v is None else mu_v
    return ArdPrior(U=U, V=V, mu_u=mu_u, mu_v=mu_v, lam=lam)


def sample_gfa_loadings(prior, view_dims, rng):
    """One ``p_g x D`` loading matrix per view, columns scaled by ``exp(-log_alpha / 2)``."""
    view_dims = tuple(int(p) for p in view_dims)
    if len(view_dims) != prior.n_groups:
        raise ValueError(f"prior has {prior.n_groups} groups, got {len(view_dims)} view sizes")
    sd = np.exp(-0.5 * prior.log_precision())
    return [rng.standard_normal((p, prior.latent_dim)) * sd[g] for g, p in enumerate(view_dims)]


def gfa_from_prior(prior, view_dims, sigma2, rng):
    """A :class:`GFA` spec whose loadings are drawn from ``prior``."""
    loadings = sample_gfa_loadings(prior, view_dims, rng)
    if np.ndim(sigma2) == 0:
        sigma2 = [float(sigma2)] * len(view_dims)
    return GFA(loadings=tuple(loadings), noise=tuple(float(s) for s in sigma2))
