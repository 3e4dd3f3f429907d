"""Kernel selection.

Uses the compiled ``_kernels`` extension when it imports, the pure-Python
``_pykernels`` otherwise. Set ``LVMZOO_PURE_PYTHON=1`` to force the fallback.
"""
import os

import numpy as np

from . import _pykernels

if os.environ.get("LVMZOO_PURE_PYTHON") == "1":
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"


def _c(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def cholesky_lower(a):
    return _impl.cholesky_lower(_c(a))


def linear_gaussian_rollout(A, z0, eta):
    return _impl.linear_gaussian_rollout(_c(A), _c(z0), _c(eta))


def iaf_affine_forward(eps, shift, lower, scale):
    return _impl.iaf_affine_forward(_c(eps), _c(shift), _c(lower), _c(scale))


def iaf_affine_inverse(z, shift, lower, scale):
    return _impl.iaf_affine_inverse(_c(z), _c(shift), _c(lower), _c(scale))


def stick_breaking(v):
    return _impl.stick_breaking(_c(v))
