"""Dense linear algebra helpers and the seeded random stream.

Matrices are plain ``numpy.ndarray`` objects (C order). SPD inputs are
validated by attempting a Cholesky factorization; inputs within the
symmetry tolerance are symmetrized first.
"""
import numpy as np
from scipy.linalg import solve_triangular, subspace_angles

from . import _backend
from .errors import ConvergenceError, NotPositiveDefiniteError, NotSymmetricError

SYMMETRY_RTOL = 1e-12


def kron(a, b):
    """Kronecker product; block ``(i, j)`` of the result is ``a[i, j] * b``."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    out = a[:, None, :, None] * b[None, :, None, :]
    return out.reshape(a.shape[0] * b.shape[0], a.shape[1] * b.shape[1])


def vec(a):
    """Stack the columns of ``a`` into one vector."""
    return np.asarray(a, dtype=float).reshape(-1, order="F")


def unvec(v, rows, cols):
    return np.asarray(v, dtype=float).reshape(rows, cols, order="F")


def is_symmetric(a, rtol=SYMMETRY_RTOL):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    scale = max(np.abs(a).max(initial=0.0), 1.0)
    return bool(np.abs(a - a.T).max(initial=0.0) <= rtol * scale)


def symmetrize(a, rtol=SYMMETRY_RTOL):
    """Return ``(a + a.T) / 2``; raise if ``a`` is asymmetric beyond ``rtol``."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSymmetricError(f"expected a square matrix, got shape {a.shape}")
    if not is_symmetric(a, rtol):
        raise NotSymmetricError(
            f"matrix is not symmetric (max |a - a.T| = {np.abs(a - a.T).max():.3g})"
        )
    return (a + a.T) / 2


def vech(a):
    """Lower triangle (diagonal included) stacked column by column.

    Length is ``n (n + 1) / 2``.
    """
    a = symmetrize(a)
    rows, cols = np.triu_indices(a.shape[0])
    # column-major walk of the lower triangle == row-major walk of the upper
    return a.T[rows, cols].copy()


def matrix_normal_param_count(n, p):
    """Free parameters of a matrix normal: ``vec(M)``, ``vech`` of both covariances."""
    if n < 1 or p < 1:
        raise ValueError("n and p must be positive")
    count = (2 * n * p + n * (n + 1) + p * (p + 1)) // 2
    assert count > n * p
    return count


def cholesky(a):
    """Lower-triangular ``L`` with ``L @ L.T == a``.

    Raises
    ------
    NotPositiveDefiniteError
        With ``pivot`` set to the index of the first non-positive pivot.
    """
    a = symmetrize(a)
    L, pivot = _backend.cholesky_lower(a)
    if pivot >= 0:
        raise NotPositiveDefiniteError(pivot)
    return L


def as_spd(a, name="matrix"):
    """Symmetrize and validate ``a`` as SPD; returns the symmetrized copy."""
    try:
        s = symmetrize(a)
        cholesky(s)
    except NotSymmetricError as exc:
        raise NotSymmetricError(f"{name}: {exc}") from None
    except NotPositiveDefiniteError as exc:
        raise NotPositiveDefiniteError(exc.pivot, f"{name}: {exc}") from None
    return s


def sym_eig(a):
    """Eigen-decomposition of a symmetric matrix, eigenvalues descending.

    Returns ``(values, vectors)`` with ``vectors[:, i]`` paired to ``values[i]``.
    """
    a = symmetrize(a)
    try:
        values, vectors = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        # LAPACK syevd reports failure without an iteration count
        raise ConvergenceError(f"eigendecomposition did not converge: {exc}") from None
    order = np.argsort(values)[::-1]
    return values[order], vectors[:, order]


def solve_spd(a, b):
    L = cholesky(a)
    y = solve_triangular(L, b, lower=True)
    return solve_triangular(L.T, y, lower=False)


def logdet_spd(a):
    return 2.0 * np.log(np.diag(cholesky(a))).sum()


def principal_angles(a, b, degrees=True):
    """Principal angles between ``span(a)`` and ``span(b)`` (columns), largest first."""
    angles = subspace_angles(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    return np.degrees(angles) if degrees else angles


def rel_frobenius(estimate, target):
    """``||estimate - target||_F / ||target||_F``."""
    target = np.asarray(target, dtype=float)
    return float(np.linalg.norm(np.asarray(estimate) - target) / np.linalg.norm(target))


def empirical_covariance(x):
    """Covariance of the rows of ``x`` (divisor ``n``)."""
    x = np.asarray(x, dtype=float)
    xc = x - x.mean(axis=0)
    return xc.T @ xc / x.shape[0]


class RngStream:
    """Seeded random stream backed by the counter-based Philox generator.

    Two streams built from the same seed yield bit-identical draws for the
    same call sequence. ``spawn`` derives independent child streams, so
    parallel work can replay deterministically.

    Parameters
    ----------
    seed : int
        Unsigned 64-bit seed.
    """

    def __init__(self, seed, _key=None):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = seed
        bitgen = np.random.Philox(key=_key) if _key is not None else np.random.Philox(seed)
        self.generator = np.random.Generator(bitgen)

    def __repr__(self):
        return f"RngStream(seed={self.seed})"

    def spawn(self, index):
        """Child stream keyed on ``(seed, index)``; does not advance this stream."""
        ss = np.random.SeedSequence([self.seed, int(index)])
        return RngStream(self.seed, _key=ss.generate_state(2, dtype=np.uint64))

    def standard_normal(self, size=None):
        return self.generator.standard_normal(size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.generator.normal(loc, scale, size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.generator.uniform(low, high, size)

    def gamma(self, shape, scale=1.0, size=None):
        return self.generator.gamma(shape, scale, size)

    def beta(self, a, b, size=None):
        return self.generator.beta(a, b, size)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size)

    def choice(self, a, size=None, p=None):
        return self.generator.choice(a, size=size, p=p)

    def multinomial(self, n, pvals, size=None):
        return self.generator.multinomial(n, pvals, size)
