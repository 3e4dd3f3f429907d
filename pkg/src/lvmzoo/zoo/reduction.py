"""Special-case relations between zoo members.

Each known pair checks a structural condition (noise pattern, loading mask,
source distribution) and then compares implied moments. Pairs may be given
in either order.
"""
from dataclasses import dataclass, field

import numpy as np

from .moments import implied_moments
from .specs import CCA, FA, GFA, IBFA, ICA, MBFA, PPCA

EXACT_TOL = 1e-12


@dataclass
class Condition:
    name: str
    passed: bool
    deviation: float = 0.0
    failure: str = ""

    def to_dict(self):
        return {
            "name": self.name,
            "passed": self.passed,
            "deviation": self.deviation,
            **({"failure": self.failure} if not self.passed else {}),
        }


@dataclass
class ReductionReport:
    source: str
    target: str
    known: bool
    conditions: list = field(default_factory=list)
    note: str = ""

    @property
    def holds(self):
        return self.known and all(c.passed for c in self.conditions)

    @property
    def max_deviation(self):
        return max((c.deviation for c in self.conditions), default=0.0)

    @property
    def failures(self):
        return [c.failure or c.name for c in self.conditions if not c.passed]

    def to_dict(self):
        return {
            "source": self.source,
            "target": self.target,
            "known": self.known,
            "holds": self.holds,
            "max_deviation": self.max_deviation,
            "conditions": [c.to_dict() for c in self.conditions],
            "failures": self.failures,
            "note": self.note,
        }


def _within(dev, scale=1.0):
    return bool(dev <= EXACT_TOL * max(1.0, scale))


def _dev(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.abs(a - b).max(initial=0.0))


def _dims(small, big):
    ok = small.obs_dim == big.obs_dim and small.latent_dim == big.latent_dim
    return Condition(
        "dimensions match", ok, 0.0 if ok else float("inf"),
        f"dimensions differ ({small.obs_dim}x{small.latent_dim} vs {big.obs_dim}x{big.latent_dim})",
    )


def _moments(a, b):
    ma, mb = implied_moments(a), implied_moments(b)
    dev = max(_dev(ma.covariance, mb.covariance), _dev(ma.mean, mb.mean))
    scale = np.abs(ma.covariance).max()
    return Condition("implied moments equal", _within(dev, scale), dev, "implied moments differ")


def _ppca_fa(ppca, fa):
    conds = [_dims(ppca, fa)]
    if not conds[0].passed:
        return conds
    spread = float(np.ptp(fa.sigma2))
    conds.append(Condition("fa noise isotropic", _within(spread), spread, "fa noise not isotropic"))
    level = _dev(fa.sigma2, ppca.sigma2)
    conds.append(Condition("noise level matches", _within(level), level, "noise levels differ"))
    conds.append(_moments(ppca, fa))
    return conds


def _noise_diagonal(mv):
    off = 0.0
    for block in mv.noise_blocks():
        off = max(off, _dev(block - np.diag(np.diag(block)), 0.0))
    return Condition("noise diagonal", off == 0.0, off, "noise not diagonal")


def _multiview_fa(mv, fa):
    conds = [_dims(mv, fa)]
    if not conds[0].passed:
        return conds
    conds.append(_noise_diagonal(mv))
    w_dev = _dev(mv.stacked_loadings() @ mv.stacked_loadings().T, fa.W @ fa.W.T)
    conds.append(Condition("loadings agree", _within(w_dev), w_dev, "loadings differ"))
    n_dev = _dev(np.concatenate([np.diag(b) for b in mv.noise_blocks()]), fa.sigma2)
    conds.append(Condition("noise variances match", _within(n_dev), n_dev, "noise variances differ"))
    if fa.mean is not None:
        m_dev = _dev(fa.mean, 0.0)
        conds.append(Condition("zero mean", m_dev == 0.0, m_dev, "fa mean nonzero"))
    conds.append(_moments(mv, fa))
    return conds


def _ibfa_cca(ibfa, cca):
    conds = [_dims(ibfa, cca)]
    if not conds[0].passed:
        return conds
    mask = ibfa.mask()
    W_cca = cca.stacked_loadings()
    outside = float(np.abs(W_cca[~mask]).max(initial=0.0))
    conds.append(Condition("cca loadings carry ibfa mask", outside == 0.0, outside, "cca loadings violate ibfa mask"))
    w_dev = _dev(ibfa.stacked_loadings(), W_cca)
    conds.append(Condition("loadings equal", _within(w_dev), w_dev, "loadings differ"))
    n_dev = max(_dev(a, b) for a, b in zip(ibfa.noise_blocks(), cca.noise_blocks()))
    conds.append(Condition("noise equal", _within(n_dev), n_dev, "noise differs"))
    conds.append(_moments(ibfa, cca))
    return conds


def _gfa_mbfa(gfa, mbfa):
    conds = [_dims(gfa, mbfa)]
    if not conds[0].passed:
        return conds
    if gfa.view_dims != mbfa.view_dims:
        return conds + [Condition("view sizes match", False, float("inf"), "view sizes differ")]
    spread = 0.0
    for block in mbfa.noise_blocks():
        spread = max(spread, _dev(block, block[0, 0] * np.eye(block.shape[0])))
    conds.append(Condition("mbfa noise isotropic per view", _within(spread), spread, "mbfa noise not isotropic"))
    w_dev = _dev(gfa.stacked_loadings(), mbfa.stacked_loadings())
    conds.append(Condition("loadings equal", _within(w_dev), w_dev, "loadings differ"))
    conds.append(_moments(gfa, mbfa))
    return conds


def _ica_fa(ica, fa):
    conds = [_dims(ica, fa)]
    if not conds[0].passed:
        return conds
    shape_dev = _dev(ica.shapes, 2.0)
    conds.append(Condition("gaussian sources (shape 2)", shape_dev == 0.0, shape_dev, "sources not gaussian"))
    n_dev = _dev(ica.noise_variances(), fa.sigma2)
    conds.append(Condition("noise variances match", _within(n_dev), n_dev, "noise variances differ"))
    conds.append(_moments(ica, fa))
    return conds


_KNOWN = {
    (PPCA, FA): (_ppca_fa, "probabilistic PCA is factor analysis with isotropic noise"),
    (CCA, FA): (_multiview_fa, "CCA with diagonal per-view noise is factor analysis"),
    (MBFA, FA): (_multiview_fa, "MBFA with diagonal per-view noise is factor analysis"),
    (GFA, FA): (_multiview_fa, "GFA noise is diagonal, so it is factor analysis"),
    (IBFA, CCA): (_ibfa_cca, "IBFA is CCA with a block-masked loading matrix"),
    (GFA, MBFA): (_gfa_mbfa, "GFA is MBFA with isotropic per-view noise"),
    (ICA, FA): (_ica_fa, "ICA with shape-2 sources is factor analysis"),
}


def check_reduction(source, target):
    """Check that ``source`` is a special case of ``target``.

    Returns a :class:`ReductionReport`; unrelated pairs come back with
    ``known=False`` rather than raising.
    """
    name = lambda s: getattr(s, "model", type(s).__name__)  # noqa: E731
    for (small, big), (check, note) in _KNOWN.items():
        if isinstance(source, small) and isinstance(target, big):
            pair = (source, target)
        elif isinstance(target, small) and isinstance(source, big):
            pair = (target, source)
        else:
            continue
        return ReductionReport(name(source), name(target), True, check(*pair), note)
    return ReductionReport(name(source), name(target), False, [], "no known reduction")


__all__ = ["Condition", "ReductionReport", "check_reduction"]
