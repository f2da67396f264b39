import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.models.domain import Domain, FiberQuadrature
from app.models.field import coordinate, gaussian
from app.models.geometry import TangentVector
from app.schemas.run_config import SobolevSpec
from app.services.metric_zoo import EuclideanMetric, QuarticPerturbedMetric, RandersMetric
from app.services.sobolev import (
    classical_sobolev_norm,
    dual_norm,
    gradient_lp_norm_SM,
    gs_norm,
    horizontal_gradient_norm,
    lp_norm_M,
    lp_norm_SM,
    sobolev_norm,
)
from app.utils.errors import ReversibilityError, UnsupportedOrderError


class TestGaussianNorms:
    """u = exp(-|x|^2) against the Euclidean plane."""

    def test_lp_norm_SM(self, euclidean, rule, plane):
        assert lp_norm_SM(euclidean, gaussian(), 2.0, plane, rule) == pytest.approx(math.pi, rel=1e-9)

    def test_lp_norm_M(self, euclidean, rule, plane):
        assert lp_norm_M(euclidean, gaussian(), 2.0, plane, rule) == pytest.approx(math.sqrt(math.pi / 2.0), rel=1e-9)

    def test_gradient_norm(self, euclidean, rule, plane):
        value = gradient_lp_norm_SM(euclidean, gaussian(), 2.0, plane, rule)
        assert value == pytest.approx(math.pi * math.sqrt(2.0), rel=1e-9)

    def test_sobolev_norm(self, euclidean, rule, plane):
        value = sobolev_norm(euclidean, gaussian(), SobolevSpec(k=1, p=2), plane, rule)
        assert value == pytest.approx(math.pi + math.pi * math.sqrt(2.0), rel=1e-9)
        assert value == pytest.approx(7.584476, abs=1e-6)

    def test_order_zero_is_lp(self, euclidean, rule, plane):
        assert sobolev_norm(euclidean, gaussian(), (0, 2.0), plane, rule) == pytest.approx(math.pi, rel=1e-9)

    def test_gs_norm_and_ratio(self, euclidean, rule, plane):
        gs = gs_norm(euclidean, gaussian(), plane, rule)
        assert gs == pytest.approx(math.sqrt(math.pi / 2.0) + math.sqrt(math.pi), rel=1e-8)
        ours = sobolev_norm(euclidean, gaussian(), (1, 2.0), plane, rule)
        assert ours / gs == pytest.approx(math.sqrt(2.0 * math.pi), rel=1e-8)

    def test_classical_norm_matches_euclidean_M_norm(self, plane):
        value = classical_sobolev_norm(gaussian(), (1, 2.0), plane)
        assert value == pytest.approx(math.sqrt(math.pi / 2.0) + math.sqrt(math.pi), rel=1e-9)


class TestNormAxioms:

    @pytest.mark.parametrize("p", [1.0, 2.0, 3.0])
    def test_triangle_inequality(self, randers, random_fields, p):
        rule = FiberQuadrature.standard(2, 16)
        domain = Domain.box([-2.0, -2.0], [2.0, 2.0], 24)
        fields = random_fields(100, seed=21, spread=1.0)
        norm = lambda u: sobolev_norm(randers, u, (1, p), domain, rule)
        for u, v in zip(fields[::2], fields[1::2]):
            assert norm(u + v) <= norm(u) + norm(v) + 1e-10

    def test_absolute_homogeneity(self, randers, random_fields):
        rule = FiberQuadrature.standard(2, 16)
        domain = Domain.box([-2.0, -2.0], [2.0, 2.0], 24)
        (u,) = random_fields(1, seed=4)
        norm = lambda w: sobolev_norm(randers, w, (1, 2.0), domain, rule)
        assert norm(-3.0 * u) == pytest.approx(3.0 * norm(u), rel=1e-12)


class TestOrders:

    def test_order_two_rejected(self, euclidean, plane):
        with pytest.raises(UnsupportedOrderError):
            sobolev_norm(euclidean, gaussian(), (2, 2.0), plane)

    def test_schema_rejects_order_two(self):
        with pytest.raises(ValueError, match="unsupported order k=2"):
            SobolevSpec(k=2, p=2)

    def test_p_below_one_rejected(self, euclidean, plane):
        with pytest.raises(ValueError):
            lp_norm_SM(euclidean, gaussian(), 0.5, plane)


class TestPointwise:

    def test_randers_horizontal_gradient(self, randers):
        value = horizontal_gradient_norm(randers, coordinate(0), TangentVector.at([0.0, 0.0], [1.0, 0.0]))
        assert value == pytest.approx(2.0 / 3.0, rel=1e-12)

    def test_horizontal_gradient_needs_direction(self, randers):
        with pytest.raises(ValueError):
            horizontal_gradient_norm(randers, coordinate(0), TangentVector.at([0.0, 0.0], [0.0, 0.0]))

    def test_dual_of_euclidean_is_euclidean(self, euclidean):
        assert_allclose(dual_norm(euclidean, np.zeros((2, 2)), np.array([[3.0, 4.0], [0.0, 0.0]])), [5.0, 0.0], rtol=1e-10)

    def test_dual_of_randers(self, randers):
        # F*(xi) = sqrt(xi^2 (1 - b^2) + (xi.b)^2) / (1 - b^2) - xi.b / (1 - b^2) for a = I
        xi = np.array([1.0, 0.0])
        expected = (math.sqrt(0.75 + 0.25) - 0.5) / 0.75
        assert dual_norm(randers, np.zeros(2), xi) == pytest.approx(expected, rel=1e-9)

    def test_dual_in_three_dimensions(self):
        metric = EuclideanMetric(3)
        assert dual_norm(metric, np.zeros(3), np.array([1.0, 2.0, 2.0])) == pytest.approx(3.0, rel=1e-8)

    def test_dual_in_one_dimension(self):
        metric = RandersMetric(1, [0.5])
        assert dual_norm(metric, np.zeros(1), np.array([1.0])) == pytest.approx(2.0 / 3.0)
        assert dual_norm(metric, np.zeros(1), np.array([-1.0])) == pytest.approx(2.0)


class TestGeShen:

    def test_refuses_irreversible(self, randers, plane):
        with pytest.raises(ReversibilityError):
            gs_norm(randers, gaussian(), plane)

    def test_quartic_ratio_is_finite(self):
        metric = QuarticPerturbedMetric(2, 0.1)
        domain = Domain.box([-4.0, -4.0], [4.0, 4.0], 32)
        rule = FiberQuadrature.standard(2, 16)
        gs = gs_norm(metric, gaussian(), domain, rule)
        ours = sobolev_norm(metric, gaussian(), (1, 2.0), domain, rule)
        assert gs > 0.0
        assert 1.0 < ours / gs < 4.0
