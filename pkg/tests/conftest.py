import numpy as np
import pytest

from app.models.domain import Domain, FiberQuadrature
from app.models.field import ScalarField
from app.services.metric_zoo import EuclideanMetric, RandersMetric


@pytest.fixture
def euclidean():
    return EuclideanMetric(2)


@pytest.fixture
def randers():
    return RandersMetric(2, [0.5, 0.0])


@pytest.fixture
def rule():
    return FiberQuadrature.standard(2, 32)


@pytest.fixture
def plane():
    """[-6, 6]^2 at a resolution where Gaussians integrate to machine precision."""
    return Domain.box([-6.0, -6.0], [6.0, 6.0], 96)


def _two_bumps(centres, widths, amplitudes, name):
    def value(x):
        x = np.asarray(x, float)
        return sum(
            a * np.exp(-np.sum((x - c) ** 2, axis=-1) / w**2)
            for a, c, w in zip(amplitudes, centres, widths)
        )

    def gradient(x):
        x = np.asarray(x, float)
        return sum(
            (-2.0 * a / w**2) * (x - c) * np.exp(-np.sum((x - c) ** 2, axis=-1) / w**2)[..., None]
            for a, c, w in zip(amplitudes, centres, widths)
        )

    return ScalarField(value, gradient, name=name)


@pytest.fixture
def random_fields():
    """Factory of seeded planar fields, each a sum of two signed Gaussian bumps."""
    def make(count, seed=0, spread=1.0):
        rng = np.random.default_rng(seed)
        fields = []
        for i in range(count):
            centres = rng.uniform(-spread, spread, size=(2, 2))
            widths = rng.uniform(0.2, 0.6, size=2) * spread
            amplitudes = rng.uniform(-2.0, 2.0, size=2)
            fields.append(_two_bumps(centres, widths, amplitudes, f"bumps{i}"))
        return fields

    return make
