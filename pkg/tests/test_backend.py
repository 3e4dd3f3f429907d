"""Compiled and pure-Python kernels must agree."""
import numpy as np
import pytest

from lvmzoo import _backend, _pykernels

from .conftest import random_spd

kernels = pytest.importorskip("lvmzoo._kernels")


def test_backend_is_selected():
    assert _backend.BACKEND in ("cython", "python")


class TestKernelEquivalence:
    def test_cholesky(self, rng):
        a = random_spd(rng, 7)
        L1, p1 = kernels.cholesky_lower(a)
        L2, p2 = _pykernels.cholesky_lower(a)
        assert p1 == p2 == -1
        np.testing.assert_allclose(L1, L2, rtol=1e-12, atol=1e-14)

    @pytest.mark.parametrize("a, pivot", [([[1.0, 2], [2, 1]], 1), ([[0.0, 0], [0, 1]], 0)])
    def test_cholesky_pivot(self, a, pivot):
        a = np.array(a)
        assert kernels.cholesky_lower(a)[1] == _pykernels.cholesky_lower(a)[1] == pivot

    def test_rollout(self, rng):
        A = 0.3 * rng.standard_normal((3, 3))
        z0, eta = rng.standard_normal(3), rng.standard_normal((50, 3))
        np.testing.assert_allclose(
            kernels.linear_gaussian_rollout(A, z0, eta), _pykernels.linear_gaussian_rollout(A, z0, eta),
            rtol=1e-12, atol=1e-12,
        )

    def test_iaf_affine(self, rng):
        D = 5
        eps = rng.standard_normal((20, D))
        shift, scale = rng.standard_normal(D), np.exp(rng.standard_normal(D))
        lower = np.tril(rng.standard_normal((D, D)), -1)
        z1 = kernels.iaf_affine_forward(eps, shift, lower, scale)
        np.testing.assert_allclose(z1, _pykernels.iaf_affine_forward(eps, shift, lower, scale), rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(
            kernels.iaf_affine_inverse(z1, shift, lower, scale),
            _pykernels.iaf_affine_inverse(z1, shift, lower, scale),
            rtol=1e-12, atol=1e-12,
        )

    def test_stick_breaking(self, rng):
        v = rng.uniform(size=(4, 30))
        np.testing.assert_allclose(kernels.stick_breaking(v), _pykernels.stick_breaking(v), rtol=1e-13)

    def test_readonly_inputs_accepted(self):
        a = np.eye(2)
        a.setflags(write=False)
        np.testing.assert_array_equal(kernels.cholesky_lower(a)[0], np.eye(2))
