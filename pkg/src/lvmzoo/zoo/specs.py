"""Model specifications for the linear-Gaussian zoo and its auxiliary models.

Each class is a frozen value object. The ``model`` tag is the JSON
discriminator used by :func:`~lvmzoo.zoo.base.spec_from_dict`.
"""
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag
from scipy.stats import norm

from ..errors import NotPositiveDefiniteError, NotSymmetricError, SpecError
from ..numerics import as_spd, symmetrize
from .base import (
    ModelSpec,
    flag,
    integer,
    integers,
    matrices,
    matrix,
    noise_list,
    register,
    scalar,
    vector,
)

B_CONDITION_WARN = 1e8


def _check_spd(a, name):
    try:
        as_spd(a, name)
    except (NotSymmetricError, NotPositiveDefiniteError) as exc:
        raise SpecError(name, str(exc).split(": ", 1)[-1]) from None


def _check_psd(a, name, tol=1e-12):
    try:
        s = symmetrize(a)
    except NotSymmetricError as exc:
        raise SpecError(name, str(exc)) from None
    if s.size and np.linalg.eigvalsh(s).min() < -tol * max(1.0, np.abs(s).max()):
        raise SpecError(name, "must be positive semidefinite")


def _check_positive(v, name, allow_zero=False):
    v = np.atleast_1d(v)
    bad = v < 0 if allow_zero else v <= 0
    if np.any(bad):
        raise SpecError(name, "must be >= 0" if allow_zero else "must be > 0")


def _check_mean(mean, p):
    if mean is not None and mean.shape != (p,):
        raise SpecError("mean", f"expected length {p}, got {mean.shape[0]}")


class LinearGaussianLvm(ModelSpec):
    """Shared behaviour of the single-view ``y = mean + W z + noise`` models."""

    @property
    def obs_dim(self):
        return self.W.shape[0]

    @property
    def latent_dim(self):
        return self.W.shape[1]

    def mean_vector(self):
        return np.zeros(self.obs_dim) if self.mean is None else np.array(self.mean)

    def noise_variances(self):
        raise NotImplementedError

    def validate(self):
        _check_mean(self.mean, self.obs_dim)


@register
@dataclass(frozen=True, eq=False)
class PPCA(LinearGaussianLvm):
    """Isotropic noise ``sigma2 * I``; ``sigma2 = 0`` is the PCA limit."""

    model = "ppca"
    W: np.ndarray = matrix()
    sigma2: float = scalar()
    mean: np.ndarray = vector(None)

    def validate(self):
        super().validate()
        _check_positive(self.sigma2, "sigma2", allow_zero=True)

    @property
    def pca_limit(self):
        return self.sigma2 == 0.0

    def noise_variances(self):
        return np.full(self.obs_dim, self.sigma2)


@register
@dataclass(frozen=True, eq=False)
class FA(LinearGaussianLvm):
    model = "fa"
    W: np.ndarray = matrix()
    sigma2: np.ndarray = vector()
    mean: np.ndarray = vector(None)

    def validate(self):
        super().validate()
        if self.sigma2.shape != (self.obs_dim,):
            raise SpecError("sigma2", f"expected length {self.obs_dim}, got {self.sigma2.shape[0]}")
        _check_positive(self.sigma2, "sigma2")

    def noise_variances(self):
        return np.array(self.sigma2)


@register
@dataclass(frozen=True, eq=False)
class ICA(LinearGaussianLvm):
    """Generalized-Gaussian sources with per-source ``shapes``, FA-style noise.

    Sources are scaled to unit variance, so second moments match the FA
    model with the same ``W`` and ``sigma2``. ``noiseless`` drops the noise
    term (``sigma2`` is then ignored and may be omitted).
    """

    model = "ica"
    W: np.ndarray = matrix()
    shapes: np.ndarray = vector()
    sigma2: np.ndarray = vector(None)
    noiseless: bool = flag(False)
    mean: np.ndarray = vector(None)

    def validate(self):
        super().validate()
        if self.shapes.shape != (self.latent_dim,):
            raise SpecError("shapes", f"expected length {self.latent_dim}, got {self.shapes.shape[0]}")
        _check_positive(self.shapes, "shapes")
        if self.noiseless:
            return
        if self.sigma2 is None:
            raise SpecError("sigma2", "is required unless noiseless")
        if self.sigma2.shape != (self.obs_dim,):
            raise SpecError("sigma2", f"expected length {self.obs_dim}, got {self.sigma2.shape[0]}")
        _check_positive(self.sigma2, "sigma2")

    def noise_variances(self):
        return np.zeros(self.obs_dim) if self.noiseless else np.array(self.sigma2)


class MultiViewSpec(ModelSpec):
    """``G`` views sharing one standard-normal latent vector.

    ``loadings[g]`` is ``p_g x D``; ``noise[g]`` is a ``p_g x p_g`` covariance
    or, for isotropic views, a scalar variance.
    """

    min_views = 2
    max_views = None
    isotropic = False

    @property
    def view_dims(self):
        return tuple(w.shape[0] for w in self.loadings)

    @property
    def obs_dim(self):
        return sum(self.view_dims)

    @property
    def latent_dim(self):
        return self.loadings[0].shape[1]

    def stacked_loadings(self):
        return np.vstack(self.loadings)

    def noise_blocks(self):
        return [
            n * np.eye(p) if np.ndim(n) == 0 else np.array(n)
            for n, p in zip(self.noise, self.view_dims)
        ]

    def noise_covariance(self):
        return block_diag(*self.noise_blocks())

    def validate(self):
        g = len(self.loadings)
        if g < self.min_views or (self.max_views is not None and g > self.max_views):
            want = self.max_views if self.max_views == self.min_views else f">= {self.min_views}"
            raise SpecError("loadings", f"{self.model} needs {want} views, got {g}")
        if len(self.noise) != g:
            raise SpecError("noise", f"expected {g} entries, got {len(self.noise)}")
        d = self.latent_dim
        for i, w in enumerate(self.loadings):
            if w.shape[1] != d:
                raise SpecError(f"loadings[{i}]", f"expected {d} columns, got {w.shape[1]}")
        for i, (n, p) in enumerate(zip(self.noise, self.view_dims)):
            name = f"noise[{i}]"
            if np.ndim(n) == 0:
                if not self.isotropic:
                    raise SpecError(name, f"{self.model} needs a full {p}x{p} covariance")
                _check_positive(n, name)
            else:
                if self.isotropic:
                    raise SpecError(name, f"{self.model} needs an isotropic scalar variance")
                if n.shape != (p, p):
                    raise SpecError(name, f"expected {p}x{p}, got {n.shape[0]}x{n.shape[1]}")
                _check_spd(n, name)


@register
@dataclass(frozen=True, eq=False)
class CCA(MultiViewSpec):
    model = "cca"
    max_views = 2
    loadings: tuple = matrices()
    noise: tuple = noise_list()


@register
@dataclass(frozen=True, eq=False)
class IBFA(MultiViewSpec):
    """Two-view CCA whose loading columns are split ``(shared, view 1, view 2)``.

    ``blocks = (d0, d1, d2)``; view 1 must have zeros in the view-2 columns
    and vice versa, checked exactly.
    """

    model = "ibfa"
    max_views = 2
    loadings: tuple = matrices()
    noise: tuple = noise_list()
    blocks: tuple = integers()

    def validate(self):
        super().validate()
        if len(self.blocks) != 3 or min(self.blocks) < 0:
            raise SpecError("blocks", "expected three nonnegative sizes (shared, view1, view2)")
        d0, d1, d2 = self.blocks
        if d0 + d1 + d2 != self.latent_dim:
            raise SpecError("blocks", f"sizes sum to {d0 + d1 + d2}, loadings have {self.latent_dim} columns")
        if np.any(self.loadings[0][:, d0 + d1:] != 0):
            raise SpecError("loadings[0]", "view-2-specific columns must be exactly zero")
        if np.any(self.loadings[1][:, d0:d0 + d1] != 0):
            raise SpecError("loadings[1]", "view-1-specific columns must be exactly zero")

    @classmethod
    def from_blocks(cls, w10, w11, w20, w22, noise1, noise2):
        """Assemble the masked loading matrix from its nonzero blocks."""
        w10, w11, w20, w22 = (np.atleast_2d(np.asarray(w, dtype=float)) for w in (w10, w11, w20, w22))
        d0, d1, d2 = w10.shape[1], w11.shape[1], w22.shape[1]
        w1 = np.hstack([w10, w11, np.zeros((w10.shape[0], d2))])
        w2 = np.hstack([w20, np.zeros((w20.shape[0], d1)), w22])
        return cls(loadings=(w1, w2), noise=(noise1, noise2), blocks=(d0, d1, d2))

    def mask(self):
        """Boolean pattern of the entries allowed to be nonzero in the stacked loading."""
        d0, d1, d2 = self.blocks
        p1, p2 = self.view_dims
        m = np.zeros((p1 + p2, d0 + d1 + d2), dtype=bool)
        m[:, :d0] = True
        m[:p1, d0:d0 + d1] = True
        m[p1:, d0 + d1:] = True
        return m


@register
@dataclass(frozen=True, eq=False)
class MBFA(MultiViewSpec):
    model = "mbfa"
    loadings: tuple = matrices()
    noise: tuple = noise_list()


@register
@dataclass(frozen=True, eq=False)
class GFA(MultiViewSpec):
    """Multi-view model with isotropic per-view noise ``sigma2_g * I``."""

    model = "gfa"
    isotropic = True
    loadings: tuple = matrices()
    noise: tuple = noise_list()


@register
@dataclass(frozen=True, eq=False)
class Lisrel(ModelSpec):
    """Two-part structural model.

    Measurement: ``y1 = W1 z1 + e1`` and ``y2 = W2 z2 + e2``.
    Structure: ``B z2 = C z1 + xi``. All covariances are diagonal and given
    as variance vectors.
    """

    model = "lisrel"
    W1: np.ndarray = matrix()
    W2: np.ndarray = matrix()
    B: np.ndarray = matrix()
    C: np.ndarray = matrix()
    psi1: np.ndarray = vector()
    psi2: np.ndarray = vector()
    phi_z1: np.ndarray = vector()
    phi_xi: np.ndarray = vector()

    @property
    def dims(self):
        """``(P1, P2, D1, D2)``."""
        return self.W1.shape[0], self.W2.shape[0], self.W1.shape[1], self.W2.shape[1]

    @property
    def obs_dim(self):
        return self.W1.shape[0] + self.W2.shape[0]

    @property
    def latent_dim(self):
        return self.W1.shape[1] + self.W2.shape[1]

    def condition_number(self):
        return float(np.linalg.cond(self.B))

    def validate(self):
        p1, p2, d1, d2 = self.dims
        if self.B.shape != (d2, d2):
            raise SpecError("B", f"expected {d2}x{d2}, got {self.B.shape[0]}x{self.B.shape[1]}")
        if self.C.shape != (d2, d1):
            raise SpecError("C", f"expected {d2}x{d1}, got {self.C.shape[0]}x{self.C.shape[1]}")
        for name, v, n in (("psi1", self.psi1, p1), ("psi2", self.psi2, p2),
                           ("phi_z1", self.phi_z1, d1), ("phi_xi", self.phi_xi, d2)):
            if v.shape != (n,):
                raise SpecError(name, f"expected length {n}, got {v.shape[0]}")
            _check_positive(v, name)
        cond = self.condition_number()
        if not np.isfinite(cond) or np.linalg.matrix_rank(self.B) < d2:
            raise SpecError("B", "must be nonsingular")
        if cond > B_CONDITION_WARN:
            warnings.warn(f"B is ill-conditioned (condition number {cond:.3g})", RuntimeWarning, stacklevel=2)


@register
@dataclass(frozen=True, eq=False)
class Gsca(ModelSpec):
    """Component model ``z = W y`` with residual identity

    ``[I; W] y = [C; B] W y + [eps; xi]``.

    Generative reading (a documented choice): ``y ~ N(mean, observation_cov)``,
    then ``z = W y`` and the residuals follow deterministically.
    """

    model = "gsca"
    W: np.ndarray = matrix()
    C: np.ndarray = matrix()
    B: np.ndarray = matrix()
    observation_cov: np.ndarray = matrix()
    mean: np.ndarray = vector(None)

    @property
    def obs_dim(self):
        return self.W.shape[1]

    @property
    def latent_dim(self):
        return self.W.shape[0]

    def validate(self):
        d, p = self.W.shape
        if self.C.shape != (p, d):
            raise SpecError("C", f"expected {p}x{d}, got {self.C.shape[0]}x{self.C.shape[1]}")
        if self.B.shape != (d, d):
            raise SpecError("B", f"expected {d}x{d}, got {self.B.shape[0]}x{self.B.shape[1]}")
        if self.observation_cov.shape != (p, p):
            raise SpecError("observation_cov", f"expected {p}x{p}")
        _check_spd(self.observation_cov, "observation_cov")
        _check_mean(self.mean, p)


@register
@dataclass(frozen=True, eq=False)
class MatrixNormal(ModelSpec):
    """``Y = M + A Z Bt`` with row covariance ``Sigma`` (N x N) and column covariance ``Omega`` (P x P).

    One draw is a whole N x P matrix; the observation vector is its
    row-major flattening, whose covariance is ``kron(Sigma, Omega)``.
    The column-stacked ``vec(Y)`` has covariance ``kron(Omega, Sigma)``.
    """

    model = "matrix_normal"
    M: np.ndarray = matrix()
    Sigma: np.ndarray = matrix()
    Omega: np.ndarray = matrix()

    @property
    def obs_dim(self):
        return self.M.size

    @property
    def latent_dim(self):
        return 0

    def validate(self):
        n, p = self.M.shape
        if self.Sigma.shape != (n, n):
            raise SpecError("Sigma", f"expected {n}x{n}")
        if self.Omega.shape != (p, p):
            raise SpecError("Omega", f"expected {p}x{p}")
        _check_spd(self.Sigma, "Sigma")
        _check_spd(self.Omega, "Omega")


@register
@dataclass(frozen=True, eq=False)
class Tobit(ModelSpec):
    """Censored regression ``y* = beta x + eps``, ``y = max(0, y*)``.

    Each draw is one vector over the covariate values ``x``.
    """

    model = "tobit"
    beta: float = scalar()
    x: np.ndarray = vector()
    sigma2: float = scalar()

    @property
    def obs_dim(self):
        return self.x.shape[0]

    @property
    def latent_dim(self):
        return self.x.shape[0]

    def validate(self):
        _check_positive(self.sigma2, "sigma2")

    def censoring_probability(self):
        """``P(y = 0) = Phi(-beta x / sigma)`` per covariate value."""
        return norm.cdf(-self.beta * self.x / np.sqrt(self.sigma2))


@register
@dataclass(frozen=True, eq=False)
class Airy(ModelSpec):
    """Balanced variance-components model: ``y_n = 1 mu + 1 z_n + eps``."""

    model = "airy"
    mu: float = scalar()
    sigma2_z: float = scalar()
    sigma2_eps: float = scalar()
    repeats: int = integer()

    @property
    def obs_dim(self):
        return self.repeats

    @property
    def latent_dim(self):
        return 1

    def validate(self):
        _check_positive(self.sigma2_z, "sigma2_z", allow_zero=True)
        _check_positive(self.sigma2_eps, "sigma2_eps")
        if self.repeats < 1:
            raise SpecError("repeats", "must be >= 1")


@register
@dataclass(frozen=True, eq=False)
class TemporalLinearGaussian(ModelSpec):
    """Linear-Gaussian state space: ``z_t = A z_{t-1} + eta``, ``y_t = H z_t + eps``.

    ``R`` may be singular (including zero). Without ``initial_cov`` the
    first state is drawn from the stationary law, which needs spectral
    radius of ``A`` below one.
    """

    model = "temporal"
    A: np.ndarray = matrix()
    H: np.ndarray = matrix()
    Q: np.ndarray = matrix()
    R: np.ndarray = matrix()
    initial_mean: np.ndarray = vector(None)
    initial_cov: np.ndarray = matrix(None)

    @property
    def obs_dim(self):
        return self.H.shape[0]

    @property
    def latent_dim(self):
        return self.A.shape[0]

    def spectral_radius(self):
        return float(np.abs(np.linalg.eigvals(self.A)).max())

    def validate(self):
        d = self.A.shape[0]
        if self.A.shape != (d, d):
            raise SpecError("A", "must be square")
        if self.H.shape[1] != d:
            raise SpecError("H", f"expected {d} columns, got {self.H.shape[1]}")
        if self.Q.shape != (d, d):
            raise SpecError("Q", f"expected {d}x{d}")
        _check_spd(self.Q, "Q")
        p = self.H.shape[0]
        if self.R.shape != (p, p):
            raise SpecError("R", f"expected {p}x{p}")
        _check_psd(self.R, "R")
        if self.initial_mean is not None and self.initial_mean.shape != (d,):
            raise SpecError("initial_mean", f"expected length {d}")
        if self.initial_cov is not None:
            if self.initial_cov.shape != (d, d):
                raise SpecError("initial_cov", f"expected {d}x{d}")
            _check_psd(self.initial_cov, "initial_cov")
        elif self.spectral_radius() >= 1.0:
            raise SpecError("initial_cov", "required when A has spectral radius >= 1 (no stationary law)")


@register
@dataclass(frozen=True, eq=False)
class DirichletCategorical(ModelSpec):
    """``p ~ Dirichlet(alpha)``, then ``draws`` categorical trials per row, recorded as counts."""

    model = "dirichlet_categorical"
    alpha: np.ndarray = vector()
    draws: int = integer(1)

    @property
    def obs_dim(self):
        return self.alpha.shape[0]

    @property
    def latent_dim(self):
        return self.alpha.shape[0]

    def validate(self):
        _check_positive(self.alpha, "alpha")
        if self.draws < 0:
            raise SpecError("draws", "must be >= 0")
