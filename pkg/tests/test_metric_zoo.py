import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.models.geometry import Point, TangentVector
from app.services.metric_zoo import (
    ConformalRiemannianMetric,
    EuclideanMetric,
    FunkMetric,
    QuarticPerturbedMetric,
    RandersMetric,
    build_metric,
    check_homogeneity,
    eval_F,
    fundamental_tensor,
    reverse_metric,
    reversibility_defect,
    validate_metric,
)
from app.utils.errors import MetricDomainError, MetricValidityError


class TestEvalF:
    """Closed-form values of the zoo metrics."""

    def test_euclidean_is_vector_length(self, euclidean):
        assert eval_F(euclidean, TangentVector.at([1.0, 2.0], [3.0, 4.0])) == pytest.approx(5.0)

    def test_randers_forward_and_backward(self, randers):
        assert eval_F(randers, TangentVector.at([0.0, 0.0], [1.0, 0.0])) == pytest.approx(1.5)
        assert eval_F(randers, TangentVector.at([0.0, 0.0], [-1.0, 0.0])) == pytest.approx(0.5)

    def test_zero_vector_gives_zero(self, randers):
        assert eval_F(randers, TangentVector.at([0.3, 0.1], [0.0, 0.0])) == 0.0

    def test_funk_at_origin_is_euclidean(self):
        assert eval_F(FunkMetric(2), ([0.0, 0.0], [0.6, 0.8])) == pytest.approx(1.0)

    def test_funk_outside_ball_raises(self):
        with pytest.raises(MetricDomainError):
            eval_F(FunkMetric(2), ([1.2, 0.0], [1.0, 0.0]))

    def test_conformal_scales_with_exponential(self):
        metric = ConformalRiemannianMetric.linear([0.3, 0.0])
        assert eval_F(metric, ([1.0, 5.0], [0.0, 2.0])) == pytest.approx(2.0 * math.exp(0.3))

    def test_tangent_vector_dimension_mismatch(self):
        with pytest.raises(ValueError):
            TangentVector(Point([0.0, 0.0]), [1.0, 0.0, 0.0])


class TestFundamentalTensor:

    def test_euclidean_identity(self, euclidean):
        assert_allclose(fundamental_tensor(euclidean, ([0.0, 0.0], [1.0, 1.0])), np.eye(2))

    def test_randers_closed_form(self, randers):
        g = fundamental_tensor(randers, ([0.0, 0.0], [1.0, 0.0]))
        assert_allclose(g, np.diag([2.25, 1.5]), atol=1e-12)

    def test_quartic_matches_finite_difference(self):
        metric = QuarticPerturbedMetric(2, 0.1)
        y = np.array([0.7, 0.4])
        g = fundamental_tensor(metric, ([0.0, 0.0], y))
        # y g y = F^2 by Euler's theorem
        assert y @ g @ y == pytest.approx(eval_F(metric, ([0.0, 0.0], y)) ** 2, rel=1e-7)
        assert np.all(np.linalg.eigvalsh(g) > 0.0)

    def test_zero_direction_rejected(self, euclidean):
        with pytest.raises(ValueError):
            fundamental_tensor(euclidean, ([0.0, 0.0], [0.0, 0.0]))

    def test_tensor_is_zero_homogeneous(self, randers):
        x = [0.2, -0.1]
        assert_allclose(
            fundamental_tensor(randers, (x, [0.3, 0.4])),
            fundamental_tensor(randers, (x, [3.0, 4.0])),
            atol=1e-12,
        )


class TestStructure:

    def test_reverse_randers_flips_covector(self, randers):
        reversed_metric = reverse_metric(randers)
        assert eval_F(reversed_metric, ([0.0, 0.0], [1.0, 0.0])) == pytest.approx(0.5)

    def test_reverse_twice_is_identity(self, randers):
        twice = reverse_metric(reverse_metric(randers))
        assert eval_F(twice, ([0.0, 0.0], [1.0, 0.0])) == pytest.approx(1.5)

    def test_reversibility_defect(self, euclidean, randers):
        points = [Point([0.0, 0.0]), Point([0.5, -0.5])]
        assert reversibility_defect(euclidean, points) == pytest.approx(0.0, abs=1e-14)
        assert reversibility_defect(randers, points) == pytest.approx(1.0, rel=1e-12)

    def test_homogeneity_report(self, randers):
        report = check_homogeneity(randers, [([0.0, 0.0], [1.0, 2.0])], [0.5, 2.0, 10.0])
        assert report.max_relative_deviation < 1e-14
        assert report.samples == 1

    def test_homogeneity_rejects_nonpositive_lambda(self, randers):
        with pytest.raises(ValueError):
            check_homogeneity(randers, [([0.0, 0.0], [1.0, 0.0])], [-1.0])

    def test_randers_with_large_b_is_invalid(self):
        with pytest.raises(MetricValidityError):
            RandersMetric(2, [1.0, 0.0])

    def test_quartic_epsilon_range(self):
        with pytest.raises(MetricValidityError):
            QuarticPerturbedMetric(2, 0.5)


class TestValidation:

    @pytest.mark.parametrize("kind, kwargs", [
        ("euclidean", {}),
        ("randers", {"b": [0.5, 0.0]}),
        ("conformal", {}),
        ("quartic", {"epsilon": 0.1}),
        ("funk", {}),
    ])
    def test_zoo_metrics_are_valid(self, kind, kwargs):
        report = validate_metric(build_metric(kind, 2, **kwargs), sample_count=100, seed=7)
        assert report.valid
        assert report.samples == 100
        assert report.min_F > 0.0

    def test_build_metric_unknown_kind(self):
        with pytest.raises(ValueError):
            build_metric("hyperbolic")

    def test_scaled_euclidean(self):
        metric = EuclideanMetric(3, scale=2.0)
        assert eval_F(metric, ([0.0, 0.0, 0.0], [0.0, 0.0, 1.0])) == pytest.approx(2.0)
