import numpy as np
import pytest

from lvmzoo.numerics import RngStream


@pytest.fixture
def rng():
    return RngStream(20240601)


def random_spd(rng, p, jitter=0.5):
    a = rng.standard_normal((p, p))
    return a @ a.T + jitter * np.eye(p)
