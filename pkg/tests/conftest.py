import numpy as np
import pytest

from wassinc import ParticleCloud, RateFunctions


def cloud(*points) -> ParticleCloud:
    return ParticleCloud(np.array(points, dtype=float))


def delta(*coords) -> ParticleCloud:
    return ParticleCloud(np.array([coords], dtype=float))


def random_cloud(rng, n, d, scale=2.0) -> ParticleCloud:
    return ParticleCloud(scale * rng.standard_normal((n, d)))


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(key=20240))


def const_rates(m, l, L, T=1.0) -> RateFunctions:
    return RateFunctions.constant(m, l, L, T)
