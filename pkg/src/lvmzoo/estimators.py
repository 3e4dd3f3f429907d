"""Closed-form and EM estimators for the zoo members with known fitting procedures."""
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .distributions import Dirichlet, dirichlet_categorical_posterior
from .errors import NotPositiveDefiniteError, SpecError
from .numerics import cholesky, empirical_covariance, sym_eig
from .zoo.base import _encode
from .zoo.dataset import Dataset
from .zoo.specs import CCA, FA, PPCA, Airy

log = logging.getLogger(__name__)

HEYWOOD_FLOOR = 1e-6
# EM creeps toward a Heywood boundary sublinearly; flag variances this small relative to S_pp
HEYWOOD_RATIO = 1e-3


@dataclass
class FitResult:
    """Estimates plus optimization record.

    ``spec`` is the fitted model as a spec object when the estimates form a
    valid one, else ``None`` (the raw numbers stay in ``params``).
    """

    model: str
    params: dict
    loglik_trace: list
    converged: bool
    iterations: int
    diagnostics: dict = field(default_factory=dict)
    spec: object = None

    def to_dict(self):
        return {
            "model": self.model,
            "params": {k: _encode(v) for k, v in self.params.items()},
            "loglik_trace": [float(v) for v in self.loglik_trace],
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "diagnostics": {k: _encode(v) for k, v in self.diagnostics.items()},
            "spec": self.spec.to_dict() if hasattr(self.spec, "to_dict") else None,
        }


def _as_dataset(data):
    return data if isinstance(data, Dataset) else Dataset(np.asarray(data, dtype=float))


def gaussian_loglik(S, C, n):
    """Log-likelihood of ``n`` rows with sample covariance ``S`` (divisor ``n``)
    under ``N(sample mean, C)``."""
    L = cholesky(C)
    P = S.shape[0]
    trace = np.trace(cho_solve((L, True), S))
    return -0.5 * n * (P * np.log(2 * np.pi) + 2.0 * np.log(np.diag(L)).sum() + trace)


def _gauge_signs(W):
    pivots = np.argmax(np.abs(W), axis=0)
    signs = np.sign(W[pivots, np.arange(W.shape[1])])
    signs[signs == 0] = 1.0
    return signs


def _sign_gauge(W):
    """Flip columns so that each column's largest-magnitude entry is positive."""
    return W * _gauge_signs(W)


def _check_latent_dim(d, P):
    if not isinstance(d, (int, np.integer)) or not 1 <= d < P:
        raise ValueError(f"latent dim must satisfy 1 <= d < P = {P}, got {d}")


def _warn_density(ds):
    if ds.n <= ds.p:
        warnings.warn(
            f"N = {ds.n} <= P = {ds.p} (measurement density {ds.measurement_density:.3g}); "
            "the sample covariance is rank deficient",
            stacklevel=3,
        )


def fit_ppca_mle(data, d):
    """Closed-form maximum likelihood for probabilistic PCA.

    ``sigma2`` is the mean of the trailing ``P - d`` eigenvalues of the sample
    covariance and ``W = U_d (Lambda_d - sigma2 I)^{1/2}``, with orthogonal
    columns and a sign gauge. When the trailing eigenvalues vanish (data in a
    ``d``-dimensional subspace) ``sigma2`` is set to 0 and the fit is the PCA
    limit, flagged in ``diagnostics["pca_limit"]``.

    Raises
    ------
    ValueError
        ``d`` out of range, or fewer than ``d`` positive eigenvalues.
    """
    ds = _as_dataset(data)
    _check_latent_dim(d, ds.p)
    _warn_density(ds)
    Y = ds.observations
    mu = Y.mean(axis=0)
    S = empirical_covariance(Y)
    vals, vecs = sym_eig(S)
    zero_tol = 1e-10 * max(vals[0], np.finfo(float).tiny) * ds.p
    n_pos = int(np.sum(vals > zero_tol))
    if n_pos < d:
        raise ValueError(f"sample covariance has {n_pos} positive eigenvalues, need at least d = {d}")
    sigma2 = float(vals[d:].mean())
    pca_limit = sigma2 <= zero_tol
    if pca_limit:
        sigma2 = 0.0
    W = _sign_gauge(vecs[:, :d] * np.sqrt(vals[:d] - sigma2))
    trace = []
    if not pca_limit:
        C = W @ W.T + sigma2 * np.eye(ds.p)
        trace.append(gaussian_loglik(S, C, ds.n))
    return FitResult(
        model="ppca",
        params={"W": W, "sigma2": sigma2, "mean": mu},
        loglik_trace=trace,
        converged=True,
        iterations=1,
        diagnostics={
            "eigenvalues": vals,
            "pca_limit": bool(pca_limit),
            "measurement_density": ds.measurement_density,
        },
        spec=PPCA(W=W, sigma2=sigma2, mean=mu),
    )


def ppca_projection(W, sigma2, mean, y):
    """Posterior mean of the latents, ``(W'W + sigma2 I)^{-1} W' (y - mean)``, per row.

    At ``sigma2 = 0`` this is the least-squares coordinate of ``y`` in ``span(W)``.
    """
    W = np.asarray(W, dtype=float)
    M = W.T @ W + sigma2 * np.eye(W.shape[1])
    centered = np.atleast_2d(np.asarray(y, dtype=float)) - mean
    return np.linalg.solve(M, W.T @ centered.T).T


def _fa_rotate(W, psi):
    """Rotate so that ``W' diag(psi)^{-1} W`` is diagonal (descending), then sign gauge."""
    G = W.T @ (W / psi[:, None])
    _, R = sym_eig(G)
    return _sign_gauge(W @ R)


def fit_fa_em(data, d, max_iter=5000, tol=1e-9):
    """Factor analysis by EM on the sample covariance.

    Initialized from the PPCA closed form with noise from the residual
    diagonal. Each M-step floors noise variances at ``1e-6`` (Heywood
    cases), which keeps the log-likelihood non-decreasing. Variances at the
    floor or below ``1e-3`` of their sample variance are reported as Heywood
    cases. Stops when the
    per-observation log-likelihood gain drops below ``tol``.

    Returns
    -------
    FitResult
        ``loglik_trace[0]`` is the initial value, so ``iterations`` equals
        ``len(loglik_trace) - 1``.
    """
    ds = _as_dataset(data)
    _check_latent_dim(d, ds.p)
    _warn_density(ds)
    Y = ds.observations
    mu = Y.mean(axis=0)
    S = empirical_covariance(Y)
    P, n = ds.p, ds.n
    vals, vecs = sym_eig(S)
    sigma2 = max(float(vals[d:].mean()), 0.0)
    W = vecs[:, :d] * np.sqrt(np.clip(vals[:d] - sigma2, 0.0, None))
    psi = np.maximum(np.diag(S - W @ W.T), HEYWOOD_FLOOR)
    eye = np.eye(d)

    trace = [gaussian_loglik(S, W @ W.T + np.diag(psi), n)]
    clamped = np.zeros(P, dtype=bool)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        # E-step through the d x d posterior precision
        Wp = W / psi[:, None]
        Minv = np.linalg.inv(eye + W.T @ Wp)
        beta = Minv @ Wp.T
        SB = S @ beta.T
        Ezz = Minv + beta @ SB
        # M-step
        W = np.linalg.solve(Ezz, SB.T).T
        raw = np.diag(S) - np.einsum("pd,pd->p", W, SB)
        clamped = raw < HEYWOOD_FLOOR
        psi = np.maximum(raw, HEYWOOD_FLOOR)
        trace.append(gaussian_loglik(S, W @ W.T + np.diag(psi), n))
        log.debug("fa-em iter %d loglik %.12g", it, trace[-1])
        if abs(trace[-1] - trace[-2]) < tol * n:
            converged = True
            break

    W = _fa_rotate(W, psi)
    heywood = clamped | (psi < HEYWOOD_RATIO * np.diag(S))
    try:
        spec = FA(W=W, sigma2=psi, mean=mu)
    except SpecError:
        spec = None
    return FitResult(
        model="fa",
        params={"W": W, "sigma2": psi, "mean": mu},
        loglik_trace=trace,
        converged=converged,
        iterations=it,
        diagnostics={
            "heywood": bool(heywood.any()),
            "heywood_indices": np.flatnonzero(heywood).tolist(),
            "clamped_indices": np.flatnonzero(clamped).tolist(),
            "measurement_density": ds.measurement_density,
        },
        spec=spec,
    )


def _whitener(S, name, regularize, gamma):
    if regularize:
        S = S + gamma * np.eye(S.shape[0])
    try:
        L = cholesky(S)
    except NotPositiveDefiniteError as exc:
        raise NotPositiveDefiniteError(
            exc.pivot,
            f"{name} within-view covariance is singular (pivot {exc.pivot}); "
            "retry with regularize=True",
        ) from None
    d = np.diag(L)
    if d.min() < 1e-7 * d.max():
        raise NotPositiveDefiniteError(
            int(np.argmin(d)),
            f"{name} within-view covariance is numerically singular; retry with regularize=True",
        )
    return L


def _cca_core(S11, S22, S12, regularize=False, gamma=1e-8):
    L1 = _whitener(S11, "view 1", regularize, gamma)
    L2 = _whitener(S22, "view 2", regularize, gamma)
    K = solve_triangular(L2, solve_triangular(L1, S12, lower=True).T, lower=True).T
    A, rho, Bt = np.linalg.svd(K)
    U1 = solve_triangular(L1.T, A, lower=False)
    U2 = solve_triangular(L2.T, Bt.T, lower=False)
    return rho, U1, U2


def canonical_correlations(cov, p1):
    """Population canonical correlations of a joint covariance split after ``p1`` rows."""
    cov = np.asarray(cov, dtype=float)
    rho, _, _ = _cca_core(cov[:p1, :p1], cov[p1:, p1:], cov[:p1, p1:])
    return np.clip(rho, 0.0, 1.0)


def fit_cca_mle(data, d, regularize=False, gamma=1e-8):
    """Probabilistic CCA by the canonical-direction construction.

    With canonical directions ``U1, U2`` and correlations ``P_d`` of the
    sample covariance, ``W1 = S11 U1_d P_d^{1/2}``, ``W2 = S22 U2_d P_d^{1/2}``
    and ``Psi_g = S_gg - W_g W_g'``. The fitted cross-covariance
    ``W1 W2'`` has rank ``d``.

    Parameters
    ----------
    data : Dataset
        Needs ``column_groups`` with exactly two views.
    d : int
        Shared dimension, ``1 <= d <= min(p1, p2)``.
    regularize : bool
        Add ``gamma * I`` to both within-view blocks before whitening.
    """
    ds = _as_dataset(data)
    if ds.column_groups is None or len(ds.column_groups) != 2:
        raise ValueError("CCA needs a dataset with exactly two column groups")
    p1, p2 = ds.column_groups
    if not 1 <= d <= min(p1, p2):
        raise ValueError(f"shared dim must satisfy 1 <= d <= min(p1, p2) = {min(p1, p2)}, got {d}")
    _warn_density(ds)
    Y = ds.observations
    mu = Y.mean(axis=0)
    S = empirical_covariance(Y)
    S11, S22, S12 = S[:p1, :p1], S[p1:, p1:], S[:p1, p1:]
    rho, U1, U2 = _cca_core(S11, S22, S12, regularize, gamma)
    root = np.sqrt(rho[:d])
    W1 = S11 @ U1[:, :d] * root
    W2 = S22 @ U2[:, :d] * root
    # flipping a column pair together leaves W1 W2' unchanged
    signs = _gauge_signs(W1)
    W1, W2 = W1 * signs, W2 * signs
    psi1, psi2 = S11 - W1 @ W1.T, S22 - W2 @ W2.T
    cross = W1 @ W2.T
    sv = np.linalg.svd(cross, compute_uv=False)
    diagnostics = {
        "canonical_correlations": rho,
        "cross_covariance_rank": int(np.sum(sv > 1e-10 * max(sv[0], 1e-300))),
        "regularized": bool(regularize),
    }
    trace, spec = [], None
    try:
        spec = CCA(loadings=(W1, W2), noise=(psi1, psi2))
        C = np.block([[W1 @ W1.T + psi1, cross], [cross.T, W2 @ W2.T + psi2]])
        trace.append(gaussian_loglik(S, C, ds.n))
    except (SpecError, NotPositiveDefiniteError):
        diagnostics["degenerate_noise"] = True
    return FitResult(
        model="cca",
        params={"W1": W1, "W2": W2, "Psi1": psi1, "Psi2": psi2, "mean": mu},
        loglik_trace=trace,
        converged=True,
        iterations=1,
        diagnostics=diagnostics,
        spec=spec,
    )


def fit_airy_anova(data):
    """Balanced one-way ANOVA moment estimates for ``y_np = mu + z_n + eps_np``.

    Rows are units (nights), columns repeats. ``sigma2_z`` is floored at 0
    and the floor is flagged in ``diagnostics["sigma2_z_floored"]``.
    """
    ds = _as_dataset(data)
    N, P = ds.n, ds.p
    if P < 2:
        raise ValueError("need at least two repeats per unit to separate within and between variance")
    if N < 2:
        raise ValueError("need at least two units")
    Y = ds.observations
    mu = float(Y.mean())
    unit_means = Y.mean(axis=1)
    ms_within = float(((Y - unit_means[:, None]) ** 2).sum() / (N * (P - 1)))
    ms_between = float(P * ((unit_means - mu) ** 2).sum() / (N - 1))
    raw = (ms_between - ms_within) / P
    floored = raw < 0
    sigma2_z = max(raw, 0.0)
    spec = None
    if sigma2_z > 0 and ms_within > 0:
        spec = Airy(mu=mu, sigma2_z=sigma2_z, sigma2_eps=ms_within, repeats=P)
    return FitResult(
        model="airy",
        params={"mu": mu, "sigma2_z": sigma2_z, "sigma2_eps": ms_within},
        loglik_trace=[],
        converged=True,
        iterations=1,
        diagnostics={
            "ms_between": ms_between,
            "ms_within": ms_within,
            "sigma2_z_raw": raw,
            "sigma2_z_floored": bool(floored),
        },
        spec=spec,
    )


def fit_dirichlet_categorical(prior, observations):
    """Conjugate update from labels in ``1..K``.

    ``params["predictive"][k] = (alpha_k + c_k) / (alpha_0 + n)``; ``spec``
    holds the posterior :class:`~lvmzoo.distributions.Dirichlet`.
    """
    if not isinstance(prior, Dirichlet):
        prior = Dirichlet(np.asarray(prior, dtype=float))
    labels = np.asarray(observations).ravel()
    if labels.size and (not np.all(labels == np.round(labels)) or labels.min() < 1 or labels.max() > prior.k):
        raise ValueError(f"observations must be integer categories in 1..{prior.k}")
    counts = np.bincount(labels.astype(int) - 1, minlength=prior.k) if labels.size else np.zeros(prior.k, int)
    post = dirichlet_categorical_posterior(prior, counts)
    predictive = post.concentration / post.concentration.sum()
    return FitResult(
        model="dirichlet_categorical",
        params={"posterior": post.concentration, "predictive": predictive, "counts": counts},
        loglik_trace=[],
        converged=True,
        iterations=1,
        diagnostics={"n": int(labels.size)},
        spec=post,
    )


__all__ = [
    "FitResult",
    "HEYWOOD_FLOOR",
    "HEYWOOD_RATIO",
    "canonical_correlations",
    "fit_airy_anova",
    "fit_cca_mle",
    "fit_dirichlet_categorical",
    "fit_fa_em",
    "fit_ppca_mle",
    "gaussian_loglik",
    "ppca_projection",
]
