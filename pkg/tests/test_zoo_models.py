import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lvmzoo.numerics import RngStream
from lvmzoo.zoo import (
    CCA,
    FA,
    GFA,
    IBFA,
    ICA,
    MBFA,
    PPCA,
    Airy,
    ArdPrior,
    Dataset,
    Gsca,
    HierarchicalRegression,
    check_reduction,
    gfa_from_prior,
    gsca_residual,
    gsca_stacked_sides,
    reduce_rank_regression,
    sample_gfa_loadings,
    sample_hierarchical_regression,
)


def _ibfa(rng):
    return IBFA.from_blocks(rng.standard_normal((2, 1)), rng.standard_normal((2, 1)),
                            rng.standard_normal((3, 1)), rng.standard_normal((3, 2)),
                            np.diag([0.5, 0.7]), np.eye(3))


class TestCheckReduction:
    def test_isotropic_fa_is_ppca(self):
        W = np.array([[1.0, 0.0], [0.5, 1.0], [0.2, -0.3]])
        report = check_reduction(PPCA(W=W, sigma2=0.3), FA(W=W, sigma2=[0.3, 0.3, 0.3]))
        assert report.known and report.holds and report.max_deviation == 0.0

    def test_anisotropic_fa_is_not_ppca(self):
        W = np.array([[1.0], [0.5], [0.2]])
        report = check_reduction(PPCA(W=W, sigma2=0.3), FA(W=W, sigma2=[0.3, 0.4, 0.3]))
        assert not report.holds and "fa noise not isotropic" in report.failures

    def test_mbfa_diagonal_noise_is_fa(self):
        W = np.array([[1.0, 0.2], [0.5, 1.0], [0.3, -0.4], [0.0, 0.7]])
        mbfa = MBFA(loadings=[W[:1], W[1:3], W[3:]], noise=[[[1.0]], np.diag([0.4, 0.6]), [[0.5]]])
        fa = FA(W=W, sigma2=[1.0, 0.4, 0.6, 0.5])
        report = check_reduction(mbfa, fa)
        assert report.holds
        cov_mbfa = mbfa.stacked_loadings() @ mbfa.stacked_loadings().T + np.diag([1.0, 0.4, 0.6, 0.5])
        np.testing.assert_array_equal(cov_mbfa, fa.W @ fa.W.T + np.diag(fa.sigma2))

    def test_either_order(self):
        W = np.array([[1.0], [0.5]])
        assert check_reduction(FA(W=W, sigma2=[0.2, 0.2]), PPCA(W=W, sigma2=0.2)).holds

    def test_full_view_noise_is_not_fa(self):
        W = np.array([[1.0], [0.5], [0.3]])
        cca = CCA(loadings=[W[:1], W[1:]], noise=[[[1.0]], [[1.0, 0.4], [0.4, 1.0]]])
        report = check_reduction(cca, FA(W=W, sigma2=[1.0, 1.0, 1.0]))
        assert report.known and not report.holds and "noise not diagonal" in report.failures

    def test_ibfa_is_masked_cca(self, rng):
        ibfa = _ibfa(rng)
        cca = CCA(loadings=ibfa.loadings, noise=ibfa.noise)
        report = check_reduction(ibfa, cca)
        assert report.holds and report.max_deviation == 0.0

    def test_cca_outside_mask_fails(self, rng):
        ibfa = _ibfa(rng)
        w1 = ibfa.loadings[0].copy()
        w1[0, -1] = 0.5
        cca = CCA(loadings=(w1, ibfa.loadings[1]), noise=ibfa.noise)
        assert "cca loadings violate ibfa mask" in check_reduction(ibfa, cca).failures

    def test_gfa_is_mbfa_and_fa(self):
        W = np.array([[1.0, 0.2], [0.5, 1.0], [0.3, -0.4]])
        gfa = GFA(loadings=[W[:1], W[1:]], noise=[0.5, 0.2])
        assert check_reduction(gfa, MBFA(loadings=[W[:1], W[1:]], noise=[[[0.5]], 0.2 * np.eye(2)])).holds
        assert check_reduction(gfa, FA(W=W, sigma2=[0.5, 0.2, 0.2])).holds

    def test_gaussian_ica_is_fa(self):
        W = np.array([[1.0, 0.2], [0.3, 1.0], [0.5, 0.5]])
        assert check_reduction(ICA(W=W, shapes=[2.0, 2.0], sigma2=[0.1, 0.1, 0.1]),
                               FA(W=W, sigma2=[0.1, 0.1, 0.1])).holds
        bad = check_reduction(ICA(W=W, shapes=[1.0, 2.0], sigma2=[0.1, 0.1, 0.1]), FA(W=W, sigma2=[0.1, 0.1, 0.1]))
        assert "sources not gaussian" in bad.failures

    def test_dimension_mismatch(self):
        report = check_reduction(PPCA(W=[[1.0], [1.0]], sigma2=1.0), FA(W=[[1.0], [1.0], [1.0]], sigma2=[1, 1, 1]))
        assert report.known and not report.holds

    def test_unknown_pair_is_not_an_error(self):
        report = check_reduction(Airy(mu=0, sigma2_z=1, sigma2_eps=1, repeats=2), FA(W=[[1.0], [1.0]], sigma2=[1, 1]))
        assert not report.known and not report.holds and report.note == "no known reduction"

    def test_report_dict(self):
        d = check_reduction(PPCA(W=[[1.0], [1.0]], sigma2=1.0), FA(W=[[1.0], [1.0]], sigma2=[1, 1])).to_dict()
        assert d["holds"] and {c["name"] for c in d["conditions"]} >= {"implied moments equal"}


class TestReduceRankRegression:
    def test_exact_rank_one(self):
        B = np.outer([1.0, 2.0, -1.0], [0.5, 1.0, 3.0, 2.0])
        W, D = reduce_rank_regression(B, 1)
        np.testing.assert_allclose(W @ D, B, atol=1e-10)

    def test_identity(self):
        W, D = reduce_rank_regression(np.eye(3), 2)
        np.testing.assert_allclose(np.sum((np.eye(3) - W @ D) ** 2), 1.0)

    def test_trailing_singular_values(self, rng):
        B = rng.standard_normal((6, 4))
        W, D = reduce_rank_regression(B, 2)
        s = np.linalg.svd(B, compute_uv=False)
        np.testing.assert_allclose(np.sum((B - W @ D) ** 2), np.sum(s[2:] ** 2))
        assert W.shape == (6, 2) and D.shape == (2, 4)

    def test_eckart_young(self, rng):
        B = rng.standard_normal((6, 5))
        W, D = reduce_rank_regression(B, 2)
        best = np.linalg.norm(B - W @ D)
        for _ in range(100):
            Q = rng.standard_normal((6, 2)) @ rng.standard_normal((2, 5))
            assert np.linalg.norm(B - Q) >= best

    def test_balanced_gauge(self, rng):
        W, D = reduce_rank_regression(rng.standard_normal((5, 4)), 2)
        np.testing.assert_allclose(np.diag(W.T @ W), np.diag(D @ D.T))

    @pytest.mark.parametrize("d", [0, 3, 4])
    def test_rank_out_of_range(self, d):
        with pytest.raises(ValueError, match="rank"):
            reduce_rank_regression(np.ones((3, 5)), d)


class TestGfaLoadings:
    @staticmethod
    def _prior(mu_u=(0.0, 0.0), mu_v=(0.0, 0.0, 0.0)):
        return ArdPrior(U=np.zeros((2, 1)), V=np.zeros((3, 1)), mu_u=mu_u, mu_v=mu_v)

    def test_unit_precision(self, rng):
        for block in sample_gfa_loadings(self._prior(), (20_000, 20_000), rng):
            np.testing.assert_allclose(block.var(axis=0), 1.0, rtol=0.05)

    def test_precision_ratio(self, rng):
        w1, w2 = sample_gfa_loadings(self._prior(mu_u=(np.log(4.0), 0.0)), (50_000, 50_000), rng)
        np.testing.assert_allclose(np.mean(w1 ** 2) / np.mean(w2 ** 2), 0.25, rtol=0.1)

    def test_large_precision_switches_off(self, rng):
        w1, w2 = sample_gfa_loadings(self._prior(mu_u=(10.0, 0.0)), (1000, 1000), rng)
        assert np.mean(w1 ** 2) < 1e-4 and np.mean(w2 ** 2) > 0.5

    def test_log_precision_structure(self):
        prior = ArdPrior(U=[[1.0], [2.0]], V=[[1.0], [0.0], [-1.0]], mu_u=[0.5, 0.0], mu_v=[0.0, 1.0, 0.0])
        np.testing.assert_allclose(prior.log_precision(), [[1.5, 1.5, -0.5], [2.0, 1.0, -2.0]])

    def test_view_count_mismatch(self, rng):
        with pytest.raises(ValueError):
            sample_gfa_loadings(self._prior(), (3,), rng)

    def test_rank_validation(self):
        from lvmzoo.errors import SpecError

        with pytest.raises(SpecError, match="U"):
            ArdPrior(U=np.zeros((2, 3)), V=np.zeros((3, 3)), mu_u=[0, 0], mu_v=[0, 0, 0])

    def test_spec_from_prior(self, rng):
        spec = gfa_from_prior(self._prior(), (2, 3), 0.5, rng)
        assert isinstance(spec, GFA) and spec.view_dims == (2, 3) and spec.latent_dim == 3


class TestGsca:
    @staticmethod
    def _spec(rng, p=4, d=2):
        return Gsca(W=rng.standard_normal((d, p)), C=rng.standard_normal((p, d)),
                    B=rng.standard_normal((d, d)), observation_cov=np.eye(p))

    def test_zero_weights(self, rng):
        spec = Gsca(W=np.zeros((2, 3)), C=np.ones((3, 2)), B=np.ones((2, 2)), observation_cov=np.eye(3))
        y = rng.standard_normal(3)
        eps, xi = gsca_residual(spec, y)
        np.testing.assert_array_equal(eps, y)
        np.testing.assert_array_equal(xi, 0.0)

    def test_exact_fit_case(self, rng):
        spec = Gsca(W=[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], C=[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
                    B=np.zeros((2, 2)), observation_cov=np.eye(3))
        y = np.array([1.0, 2.0, 3.0])
        eps, xi = gsca_residual(spec, y)
        np.testing.assert_array_equal(eps, [0.0, 0.0, 0.0])
        np.testing.assert_array_equal(xi, [1.0, 2.0])

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_stacked_identity(self, seed):
        rng = RngStream(seed)
        spec = self._spec(rng)
        lhs, rhs = gsca_stacked_sides(spec, rng.standard_normal(4))
        np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-12 * max(1.0, np.abs(lhs).max()))

    def test_rowwise(self, rng):
        spec = self._spec(rng)
        Y = rng.standard_normal((5, 4))
        eps, xi = gsca_residual(spec, Y)
        np.testing.assert_allclose(eps[2], gsca_residual(spec, Y[2])[0])
        assert xi.shape == (5, 2)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError):
            gsca_residual(self._spec(rng), np.ones(3))


class TestDataset:
    def test_views_and_clusters(self):
        ds = Dataset(np.arange(12.0).reshape(4, 3), column_groups=(1, 2), row_clusters=("a", "b", "a", "c"))
        v1, v2 = ds.views()
        assert v1.shape == (4, 1) and v2.shape == (4, 2)
        cl = ds.clusters()
        assert list(cl) == ["a", "b", "c"]
        np.testing.assert_array_equal(cl["a"], [0, 2])

    def test_measurement_density(self):
        assert Dataset(np.zeros((10, 4))).measurement_density == 2.5

    @pytest.mark.parametrize("kwargs", [
        {"column_groups": (1, 1)},
        {"column_groups": (0, 3)},
        {"row_clusters": (1, 2)},
    ])
    def test_partitions_must_cover(self, kwargs):
        with pytest.raises(ValueError):
            Dataset(np.zeros((3, 3)), **kwargs)

    def test_rejects_empty_and_nonfinite(self):
        with pytest.raises(ValueError):
            Dataset(np.zeros((0, 2)))
        with pytest.raises(ValueError):
            Dataset([[1.0, np.nan]])

    def test_read_only(self):
        ds = Dataset(np.zeros((2, 2)))
        with pytest.raises(ValueError):
            ds.observations[0, 0] = 1.0


class TestHierarchicalRegression:
    def test_cluster_coefficients(self, rng):
        n = 40_000
        X = np.column_stack([np.ones(n), rng.standard_normal(n)])
        clusters = tuple(int(i) for i in np.arange(n) % 3)
        spec = HierarchicalRegression(X=X, clusters=clusters, beta_mean=[1.0, -2.0],
                                      beta_cov=0.25 * np.eye(2), sigma2=[0.1, 0.2])
        betas, Y = sample_hierarchical_regression(spec, rng)
        assert betas.shape == (3, 2, 2) and Y.shape == (n, 2)
        rows = np.array(clusters) == 1
        coef, *_ = np.linalg.lstsq(X[rows], Y[rows], rcond=None)
        np.testing.assert_allclose(coef.T, betas[1], atol=0.02)

    def test_hyperprior_moments(self, rng):
        J = 20_000
        spec = HierarchicalRegression(X=np.ones((J, 1)), clusters=tuple(range(J)), beta_mean=[3.0],
                                      beta_cov=[[4.0]], sigma2=[1.0])
        betas, _ = sample_hierarchical_regression(spec, rng)
        np.testing.assert_allclose([betas.mean(), betas.var()], [3.0, 4.0], rtol=0.03)

    def test_label_count_validated(self):
        from lvmzoo.errors import SpecError

        with pytest.raises(SpecError, match="clusters"):
            HierarchicalRegression(X=np.ones((3, 1)), clusters=(0, 1), beta_mean=[0.0], beta_cov=[[1.0]], sigma2=[1.0])
