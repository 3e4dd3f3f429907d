"""Random valid specs for property tests and Monte Carlo checks."""
import numpy as np

from .specs import FA, Lisrel


def random_lisrel(rng, d1=2, d2=2, p1=3, p2=3):
    """A LISREL spec with well-conditioned structure.

    Loadings and ``C`` are standard normal. ``B = I - 0.5 G / max(1, ||G||_2)``
    with ``G`` standard normal, so its singular values lie in ``[0.5, 1.5]``.
    Variances are uniform on ``[0.2, 1.5]``.
    """
    G = rng.standard_normal((d2, d2))
    B = np.eye(d2) - 0.5 * G / max(1.0, np.linalg.norm(G, 2))
    return Lisrel(
        W1=rng.standard_normal((p1, d1)),
        W2=rng.standard_normal((p2, d2)),
        B=B,
        C=rng.standard_normal((d2, d1)),
        psi1=rng.uniform(0.2, 1.5, p1),
        psi2=rng.uniform(0.2, 1.5, p2),
        phi_z1=rng.uniform(0.2, 1.5, d1),
        phi_xi=rng.uniform(0.2, 1.5, d2),
    )


def random_fa(rng, p=6, d=2, low=0.2, high=1.0):
    """FA spec with standard normal loadings and uniform noise variances."""
    return FA(W=rng.standard_normal((p, d)), sigma2=rng.uniform(low, high, p))
