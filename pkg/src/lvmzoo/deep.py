"""Deep latent Gaussian models, inverse autoregressive flows and amortized posteriors.

Everything here is forward-only: sampling and structure checks, no training.
Networks serialize with the same canonical JSON machinery as the zoo specs.
"""
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import _backend
from .errors import NotInvertibleError, SpecError
from .numerics import cholesky
from .zoo.base import ModelSpec, Serializable, integers, matrices, matrix, nested, nested_list, register, scalar, text, vector
from .zoo.sampling import SampleBatch, _check_n, sample_lvm

ACTIVATIONS = {
    "identity": lambda x: x,
    "sigmoid": expit,
    "relu": lambda x: np.maximum(x, 0.0),
    "tanh": np.tanh,
}


@dataclass(frozen=True, eq=False)
class Dense(Serializable):
    """One layer ``h(x) = activation(W x + b)``."""

    W: np.ndarray = matrix()
    b: np.ndarray = vector()
    activation: str = text("identity")

    def validate(self):
        if self.b.shape != (self.W.shape[0],):
            raise SpecError("b", f"expected length {self.W.shape[0]}, got {self.b.shape[0]}")
        if self.activation not in ACTIVATIONS:
            raise SpecError("activation", f"unknown activation {self.activation!r}; use one of {sorted(ACTIVATIONS)}")


@dataclass(frozen=True, eq=False)
class Mlp(Serializable):
    """Composition ``h_K o ... o h_0`` of :class:`Dense` layers."""

    layers: tuple = nested_list(Dense)

    def validate(self):
        if not self.layers:
            raise SpecError("layers", "needs at least one layer")
        for k in range(1, len(self.layers)):
            want, got = self.layers[k - 1].W.shape[0], self.layers[k].W.shape[1]
            if want != got:
                raise SpecError(f"layers[{k}].W", f"expected {want} input columns, got {got}")

    @property
    def in_dim(self):
        return self.layers[0].W.shape[1]

    @property
    def out_dim(self):
        return self.layers[-1].W.shape[0]

    @classmethod
    def random(cls, dims, activations, rng):
        """Weights ``N(0, 1 / fan_in)``, zero biases; ``dims = (in, h1, ..., out)``."""
        if isinstance(activations, str):
            activations = [activations] * (len(dims) - 1)
        if len(activations) != len(dims) - 1:
            raise ValueError(f"need {len(dims) - 1} activations, got {len(activations)}")
        layers = [
            Dense(W=rng.standard_normal((d_out, d_in)) / np.sqrt(d_in), b=np.zeros(d_out), activation=act)
            for d_in, d_out, act in zip(dims[:-1], dims[1:], activations)
        ]
        return cls(layers=tuple(layers))

    @classmethod
    def linear(cls, W, b=None):
        W = np.atleast_2d(np.asarray(W, dtype=float))
        b = np.zeros(W.shape[0]) if b is None else b
        return cls(layers=(Dense(W=W, b=b),))

    @classmethod
    def constant(cls, value, in_dim):
        """Ignores its input and returns ``value``."""
        value = np.atleast_1d(np.asarray(value, dtype=float))
        return cls.linear(np.zeros((value.shape[0], in_dim)), value)


def mlp_forward(net, x):
    """Evaluate ``net`` on a vector or on each row of a matrix."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != net.in_dim:
        raise ValueError(f"network expects inputs of length {net.in_dim}, got shape {x.shape}")
    for layer in net.layers:
        x = ACTIVATIONS[layer.activation](x @ layer.W.T + layer.b)
    return x


@register
@dataclass(frozen=True, eq=False)
class DlgmSpec(ModelSpec):
    """Stack of ``L`` stochastic layers with an exponential-family emission.

    ``layer_dims[0]`` is the bottom layer (closest to the data) and
    ``layer_dims[-1]`` the top, drawn ``N(0, I)``. ``transforms[l]`` maps
    layer ``l + 1`` to the mean of layer ``l``; ``layer_covs[l]`` is its
    covariance and defaults to ``layer_variance * I``. The emission network
    reads the bottom layer; its output is the Gaussian mean (identity link,
    variance ``noise_var``) or the Bernoulli logit.
    """

    model = "dlgm"
    layer_dims: tuple = integers()
    emission: Mlp = nested(Mlp)
    transforms: tuple = nested_list(Mlp, ())
    layer_covs: tuple = matrices(None)
    layer_variance: float = scalar(1.0)
    family: str = text("gaussian")
    noise_var: float = scalar(0.0)

    def validate(self):
        L = len(self.layer_dims)
        if L < 1 or min(self.layer_dims) < 1:
            raise SpecError("layer_dims", "needs at least one positive layer size")
        if len(self.transforms) != L - 1:
            raise SpecError("transforms", f"expected {L - 1} networks for {L} layers, got {len(self.transforms)}")
        for l, net in enumerate(self.transforms):
            if (net.in_dim, net.out_dim) != (self.layer_dims[l + 1], self.layer_dims[l]):
                raise SpecError(
                    f"transforms[{l}]",
                    f"must map {self.layer_dims[l + 1]} -> {self.layer_dims[l]}, got {net.in_dim} -> {net.out_dim}",
                )
        if self.layer_covs is not None:
            if len(self.layer_covs) != L - 1:
                raise SpecError("layer_covs", f"expected {L - 1} covariances, got {len(self.layer_covs)}")
            for l, cov in enumerate(self.layer_covs):
                d = self.layer_dims[l]
                if cov.shape != (d, d):
                    raise SpecError(f"layer_covs[{l}]", f"expected {d}x{d}")
                try:
                    cholesky(cov)
                except ValueError as exc:
                    raise SpecError(f"layer_covs[{l}]", str(exc)) from None
        if not self.layer_variance > 0:
            raise SpecError("layer_variance", "must be > 0")
        if self.emission.in_dim != self.layer_dims[0]:
            raise SpecError("emission", f"must read the bottom layer of size {self.layer_dims[0]}")
        if self.family not in ("gaussian", "bernoulli"):
            raise SpecError("family", "must be 'gaussian' or 'bernoulli'")
        if self.noise_var < 0:
            raise SpecError("noise_var", "must be >= 0")

    @property
    def obs_dim(self):
        return self.emission.out_dim

    @property
    def latent_dim(self):
        return sum(self.layer_dims)

    def layer_factor(self, l):
        if self.layer_covs is None:
            return np.sqrt(self.layer_variance) * np.eye(self.layer_dims[l])
        return cholesky(self.layer_covs[l])


def dlgm_sample(spec, n, rng):
    """Top-down ancestral sampling; ``latents`` holds every layer, bottom first."""
    _check_n(n)
    L = len(spec.layer_dims)
    z = [None] * L
    z[-1] = rng.standard_normal((n, spec.layer_dims[-1]))
    for l in range(L - 2, -1, -1):
        mean = mlp_forward(spec.transforms[l], z[l + 1])
        z[l] = mean + rng.standard_normal((n, spec.layer_dims[l])) @ spec.layer_factor(l).T
    out = mlp_forward(spec.emission, z[0])
    if spec.family == "gaussian":
        y = out + np.sqrt(spec.noise_var) * rng.standard_normal(out.shape) if spec.noise_var > 0 else out
    else:
        y = (rng.uniform(size=out.shape) < expit(out)).astype(float)
    return SampleBatch(
        np.hstack(z), y, rng.seed, spec.fingerprint(), spec.model,
        {"layer_dims": list(spec.layer_dims), "family": spec.family},
    )


@sample_lvm.register
def _(spec: DlgmSpec, n, rng):
    return dlgm_sample(spec, n, rng)


class IafLayer(Serializable):
    """Autoregressive flow step ``z_d = mu_d(z_<d) + sigma_d(z_<d) * eps_d``."""

    @property
    def dim(self):
        raise NotImplementedError


def _checked_scale(scale):
    if not np.all(np.isfinite(scale)) or np.any(scale <= 0):
        raise ValueError("flow scale must be finite and > 0; check the conditioner's log-scale output")
    return scale


@dataclass(frozen=True, eq=False)
class AffineIaf(IafLayer):
    """Linear conditioner: ``mu = shift + lower @ z`` with ``lower`` strictly lower
    triangular, and constant ``sigma = exp(log_scale)``.

    The Jacobian ``dz / deps`` is ``(I - lower)^{-1} diag(sigma)``, lower triangular
    with diagonal ``sigma``.
    """

    shift: np.ndarray = vector()
    lower: np.ndarray = matrix()
    log_scale: np.ndarray = vector()

    def validate(self):
        D = self.shift.shape[0]
        if self.lower.shape != (D, D):
            raise SpecError("lower", f"expected {D}x{D}")
        if np.any(np.triu(self.lower) != 0):
            raise SpecError("lower", "must be strictly lower triangular")
        if self.log_scale.shape != (D,):
            raise SpecError("log_scale", f"expected length {D}")

    @property
    def dim(self):
        return self.shift.shape[0]

    @property
    def scale(self):
        return np.exp(self.log_scale)

    def covariance(self):
        """Covariance of ``z`` when ``eps ~ N(0, I)``."""
        a = np.linalg.solve(np.eye(self.dim) - self.lower, np.diag(self.scale))
        return a @ a.T

    @classmethod
    def identity(cls, dim):
        return cls(shift=np.zeros(dim), lower=np.zeros((dim, dim)), log_scale=np.zeros(dim))


@dataclass(frozen=True, eq=False)
class MadeIaf(IafLayer):
    """Masked one-hidden-layer conditioner.

    Hidden unit ``k`` has degree ``m_k`` in ``1..D-1`` and sees inputs ``j <= m_k``;
    output ``d`` sees hidden units with ``m_k < d``, so ``mu_d`` and
    ``sigma_d = exp(s_d)`` depend on ``z_<d`` only.
    """

    W_in: np.ndarray = matrix()
    b_in: np.ndarray = vector()
    W_mu: np.ndarray = matrix()
    b_mu: np.ndarray = vector()
    W_s: np.ndarray = matrix()
    b_s: np.ndarray = vector()
    degrees: tuple = integers()
    activation: str = text("tanh")

    def validate(self):
        H, D = self.W_in.shape
        if D < 2:
            raise SpecError("W_in", "a masked conditioner needs D >= 2")
        if len(self.degrees) != H or not all(1 <= m <= D - 1 for m in self.degrees):
            raise SpecError("degrees", f"expected {H} hidden degrees in 1..{D - 1}")
        for name, shape in (("b_in", (H,)), ("W_mu", (D, H)), ("b_mu", (D,)), ("W_s", (D, H)), ("b_s", (D,))):
            if getattr(self, name).shape != shape:
                raise SpecError(name, f"expected shape {shape}")
        if self.activation not in ACTIVATIONS:
            raise SpecError("activation", f"unknown activation {self.activation!r}")

    @property
    def dim(self):
        return self.W_in.shape[1]

    def masks(self):
        m = np.asarray(self.degrees)
        d = np.arange(1, self.dim + 1)
        return (m[:, None] >= d[None, :]).astype(float), (d[:, None] > m[None, :]).astype(float)

    def conditioner(self, z):
        """``(mu, sigma)`` for each row of ``z``."""
        m_in, m_out = self.masks()
        h = ACTIVATIONS[self.activation](z @ (self.W_in * m_in).T + self.b_in)
        mu = h @ (self.W_mu * m_out).T + self.b_mu
        return mu, np.exp(h @ (self.W_s * m_out).T + self.b_s)

    @classmethod
    def random(cls, dim, hidden, rng, activation="tanh"):
        """Seeded ``N(0, 1 / fan_in)`` weights with degrees cycling through ``1..D-1``."""
        degrees = tuple(int(k % (dim - 1)) + 1 for k in range(hidden))
        return cls(
            W_in=rng.standard_normal((hidden, dim)) / np.sqrt(dim),
            b_in=np.zeros(hidden),
            W_mu=rng.standard_normal((dim, hidden)) / np.sqrt(hidden),
            b_mu=np.zeros(dim),
            W_s=rng.standard_normal((dim, hidden)) / np.sqrt(hidden),
            b_s=np.zeros(dim),
            degrees=degrees,
            activation=activation,
        )


def _rows(x, dim, name):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != dim:
        raise ValueError(f"{name} must have length {dim}, got shape {x.shape}")
    return x, single


def iaf_forward(layer, eps):
    """Push ``eps`` (vector or rows) through the flow."""
    eps, single = _rows(eps, layer.dim, "eps")
    if isinstance(layer, AffineIaf):
        z = _backend.iaf_affine_forward(eps, layer.shift, layer.lower, _checked_scale(layer.scale))
    elif isinstance(layer, MadeIaf):
        z = np.zeros_like(eps)
        for d in range(layer.dim):
            mu, sigma = layer.conditioner(z)
            z[:, d] = mu[:, d] + _checked_scale(sigma[:, d]) * eps[:, d]
    else:
        raise TypeError(f"unsupported flow layer {type(layer).__name__}")
    return z[0] if single else z


def iaf_inverse(layer, z):
    """Recover ``eps`` from ``z``; only the affine conditioner is supported."""
    if not isinstance(layer, AffineIaf):
        raise NotInvertibleError(
            f"{type(layer).__name__} has a nonlinear conditioner and is not analytically invertible"
        )
    z, single = _rows(z, layer.dim, "z")
    eps = _backend.iaf_affine_inverse(z, layer.shift, layer.lower, _checked_scale(layer.scale))
    return eps[0] if single else eps


def iaf_jacobian(layer, eps, step=1e-6):
    """Central finite-difference Jacobian ``dz / deps`` at a single ``eps``."""
    eps = np.asarray(eps, dtype=float)
    D = eps.shape[0]
    probes = np.concatenate([eps + step * np.eye(D), eps - step * np.eye(D)])
    z = iaf_forward(layer, probes)
    return (z[:D] - z[D:]).T / (2 * step)


@dataclass(frozen=True, eq=False)
class AmortizedPosterior(Serializable):
    """``z = NN_mu(y) + NN_sigma(y) * eps``; ``nn_sigma`` emits the log scale."""

    nn_mu: Mlp = nested(Mlp)
    nn_sigma: Mlp = nested(Mlp)

    def validate(self):
        if self.nn_mu.in_dim != self.nn_sigma.in_dim:
            raise SpecError("nn_sigma", "must read the same observation size as nn_mu")
        if self.nn_mu.out_dim != self.nn_sigma.out_dim:
            raise SpecError("nn_sigma", "must emit the same latent size as nn_mu")

    @property
    def obs_dim(self):
        return self.nn_mu.in_dim

    @property
    def latent_dim(self):
        return self.nn_mu.out_dim

    def moments(self, y):
        """Posterior mean and per-coordinate scale for observation ``y``."""
        return mlp_forward(self.nn_mu, y), np.exp(mlp_forward(self.nn_sigma, y))


def amortized_posterior_sample(post, y, n, rng):
    """``n x d`` reparameterized draws for one observation ``y``."""
    _check_n(n)
    mu, sigma = post.moments(np.asarray(y, dtype=float))
    return mu + sigma * rng.standard_normal((n, post.latent_dim))
