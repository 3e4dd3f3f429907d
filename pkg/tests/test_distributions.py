import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from lvmzoo.distributions import (
    Categorical,
    Dirichlet,
    GeneralizedGaussian,
    MultivariateNormal,
    StickBreakingDP,
    dirichlet_categorical_posterior,
    dirichlet_sample,
    gg_sample,
    mvn_logpdf,
    mvn_sample,
    sample_dp,
    stick_breaking_weights,
)
from lvmzoo.errors import NotPositiveDefiniteError
from lvmzoo.numerics import RngStream

from .conftest import random_spd


class TestMultivariateNormal:
    def test_diagonal_variances(self, rng):
        x = mvn_sample(MultivariateNormal([0, 0], np.diag([1.0, 4.0])), 100_000, rng)
        np.testing.assert_allclose(x.var(axis=0), [1, 4], rtol=0.05)

    def test_mean(self, rng):
        x = mvn_sample(MultivariateNormal([5, 5], np.eye(2)), 100_000, rng)
        np.testing.assert_allclose(x.mean(axis=0), [5, 5], rtol=0.01)

    def test_skewness(self, rng):
        x = mvn_sample(MultivariateNormal([0], [[1]]), 100_000, rng)
        assert abs(stats.skew(x[:, 0])) < 0.05

    def test_not_spd_propagates(self):
        with pytest.raises(NotPositiveDefiniteError):
            MultivariateNormal([0, 0], [[1, 2], [2, 1]])

    def test_logpdf_known_values(self):
        np.testing.assert_allclose(mvn_logpdf(MultivariateNormal([0], [[1]]), [0]), -0.9189385, atol=1e-7)
        np.testing.assert_allclose(mvn_logpdf(MultivariateNormal([0, 0], np.eye(2)), [0, 0]), -1.8378771, atol=1e-7)

    def test_logpdf_matches_dense_inverse(self, rng):
        cov = random_spd(rng, 4)
        mean, x = rng.standard_normal(4), rng.standard_normal(4)
        diff = x - mean
        direct = -0.5 * (4 * np.log(2 * np.pi) + np.log(np.linalg.det(cov)) + diff @ np.linalg.inv(cov) @ diff)
        np.testing.assert_allclose(mvn_logpdf(MultivariateNormal(mean, cov), x), direct, rtol=1e-12)

    def test_logpdf_dimension_mismatch(self):
        with pytest.raises(ValueError):
            mvn_logpdf(MultivariateNormal([0, 0], np.eye(2)), [0, 0, 0])


class TestDirichlet:
    def test_uniform_means(self, rng):
        p = dirichlet_sample(Dirichlet([1.0, 1, 1]), rng, size=100_000)
        np.testing.assert_allclose(p.mean(axis=0), 1 / 3, rtol=0.01)

    def test_moment_oracle(self, rng):
        d = Dirichlet([2.0, 2.0])
        p = dirichlet_sample(d, rng, size=100_000)
        np.testing.assert_allclose(p[:, 0].mean(), 0.5, rtol=0.05)
        np.testing.assert_allclose(p[:, 0].var(), 1 / 20, rtol=0.05)
        np.testing.assert_allclose(d.variance()[0], 1 / 20)

    def test_skewed_mean(self, rng):
        p = dirichlet_sample(Dirichlet([10.0, 1.0]), rng, size=100_000)
        np.testing.assert_allclose(p[:, 0].mean(), 10 / 11, rtol=0.02)

    def test_draws_are_categorical_probabilities(self, rng):
        for alpha in ([1.0, 1.0, 1.0], [1e-3, 1e-3, 1e-3], [50.0, 0.1, 3.0]):
            for p in dirichlet_sample(Dirichlet(alpha), rng, size=200):
                Categorical(p)

    def test_single_draw_shape(self, rng):
        assert dirichlet_sample(Dirichlet.symmetric(3.0, 4), rng).shape == (4,)

    def test_symmetric_constructor(self):
        np.testing.assert_allclose(Dirichlet.symmetric(3.0, 3).concentration, [1, 1, 1])

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            Dirichlet([1.0, 0.0])


class TestConjugacy:
    def test_update(self):
        post = dirichlet_categorical_posterior(Dirichlet([1.0, 1, 1]), [2, 0, 1])
        np.testing.assert_array_equal(post.concentration, [3, 1, 2])

    def test_zero_counts_identity(self):
        prior = Dirichlet([0.5, 2, 3])
        np.testing.assert_array_equal(dirichlet_categorical_posterior(prior, [0, 0, 0]).concentration, prior.concentration)

    def test_pseudo_counts(self):
        post = dirichlet_categorical_posterior(Dirichlet.symmetric(3.0, 3), [5, 5, 5])
        np.testing.assert_array_equal(post.concentration, [6, 6, 6])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            dirichlet_categorical_posterior(Dirichlet([1.0, 1]), [1, 2, 3])

    @settings(max_examples=100)
    @given(
        st.lists(st.floats(0.01, 10), min_size=3, max_size=3),
        st.lists(st.integers(0, 1000), min_size=3, max_size=3),
        st.lists(st.integers(0, 1000), min_size=3, max_size=3),
    )
    def test_batch_associativity(self, alpha, c1, c2):
        prior = Dirichlet(alpha)
        seq = dirichlet_categorical_posterior(dirichlet_categorical_posterior(prior, c1), c2)
        once = dirichlet_categorical_posterior(prior, np.add(c1, c2))
        np.testing.assert_array_equal(seq.concentration, once.concentration)


class TestCategorical:
    def test_labels_and_frequencies(self, rng):
        y = Categorical([0.7, 0.2, 0.1]).sample(100_000, rng)
        assert set(np.unique(y)) == {1, 2, 3}
        np.testing.assert_allclose(np.bincount(y)[1:] / y.size, [0.7, 0.2, 0.1], atol=0.01)

    def test_rejects_off_simplex(self):
        with pytest.raises(ValueError):
            Categorical([0.5, 0.6])


class TestGeneralizedGaussian:
    @pytest.mark.parametrize("shape", [0.8, 1.0, 2.0, 4.0])
    def test_unit_variance_helper(self, shape):
        np.testing.assert_allclose(GeneralizedGaussian.unit_variance(shape).variance(), 1.0)

    def test_gaussian_kurtosis(self, rng):
        x = gg_sample(GeneralizedGaussian.unit_variance(2.0), 200_000, rng)
        assert abs(stats.kurtosis(x)) < 0.1
        np.testing.assert_allclose(x.var(), 1.0, rtol=0.02)

    def test_laplace_kurtosis(self, rng):
        x = gg_sample(GeneralizedGaussian.unit_variance(1.0), 200_000, rng)
        assert abs(stats.kurtosis(x) - 3.0) < 0.3

    def test_supergaussian(self, rng):
        x = gg_sample(GeneralizedGaussian.unit_variance(0.8), 200_000, rng)
        assert stats.kurtosis(x) > 3.0
        assert GeneralizedGaussian(0.8).excess_kurtosis() > 3.0

    def test_shape_two_matches_normal(self, rng):
        x = gg_sample(GeneralizedGaussian.unit_variance(2.0), 100_000, rng)
        y = mvn_sample(MultivariateNormal([0], [[1]]), 100_000, RngStream(77))[:, 0]
        assert stats.ks_2samp(x, y).statistic < 0.01

    def test_logpdf_normalizes(self):
        from scipy.integrate import quad

        for shape in (0.8, 1.0, 2.0, 3.0):
            d = GeneralizedGaussian(shape, 1.3, 0.2)
            total, _ = quad(lambda t: np.exp(d.logpdf(t)), -np.inf, np.inf)
            np.testing.assert_allclose(total, 1.0, rtol=1e-6)


class TestStickBreaking:
    def test_first_weight_mean(self, rng):
        w = stick_breaking_weights(StickBreakingDP(1.0), rng, size=100_000)
        np.testing.assert_allclose(w[:, 0].mean(), 0.5, rtol=0.01)

    def test_degenerate_stick(self, rng):
        w = stick_breaking_weights(StickBreakingDP(0.01), rng, size=10_000)
        assert w[:, 0].mean() > 0.97

    def test_truncated_mass(self, rng):
        d = StickBreakingDP(1.0, truncation=200)
        w = stick_breaking_weights(d, rng, size=2000)
        assert w.sum(axis=1).mean() >= 0.999
        assert d.residual_bound() == pytest.approx(0.5**200)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 5.0])
    def test_expected_weights(self, rng, alpha):
        d = StickBreakingDP(alpha)
        w = stick_breaking_weights(d, rng, size=100_000)
        np.testing.assert_allclose(w[:, :5].mean(axis=0), d.expected_weights()[:5], rtol=0.05)

    def test_weights_valid(self, rng):
        w = stick_breaking_weights(StickBreakingDP(2.0, truncation=50), rng)
        assert w.shape == (50,)
        assert np.all(w >= 0) and w.sum() <= 1.0

    def test_sample_dp_atoms(self, rng):
        d = StickBreakingDP(1.0, truncation=20, base_sampler=lambda r, n: r.normal(size=n))
        w, atoms = sample_dp(d, rng)
        assert w.shape == atoms.shape == (20,)
        with pytest.raises(ValueError):
            sample_dp(StickBreakingDP(1.0), rng)
