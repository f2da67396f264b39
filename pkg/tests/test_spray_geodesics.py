import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.models.geometry import Curve, TangentVector
from app.services.metric_zoo import ConformalRiemannianMetric, EuclideanMetric, FunkMetric, RandersMetric, reverse_metric
from app.services.spray_geodesics import (
    DistanceProvider,
    curve_length,
    distance,
    distance_field,
    forward_ball_indicator,
    integrate_geodesic,
    spray_coefficients,
    stencil_offsets,
)
from app.utils.errors import MetricDomainError


class TestSpray:

    def test_minkowski_spray_vanishes(self, randers):
        assert_allclose(spray_coefficients(randers, TangentVector.at([0.3, 0.2], [1.0, 2.0])), 0.0)

    def test_conformal_closed_form_matches_finite_difference(self):
        metric = ConformalRiemannianMetric.linear([0.3, -0.2])
        x = np.array([0.1, 0.4])
        y = np.array([0.7, -0.5])
        closed = metric.spray(x, y)
        generic = super(ConformalRiemannianMetric, metric)._spray(x, y)
        assert_allclose(closed, generic, rtol=1e-5, atol=1e-7)

    def test_spray_is_two_homogeneous(self):
        metric = ConformalRiemannianMetric.linear([0.3, 0.0])
        v = TangentVector.at([0.2, 0.1], [0.5, 0.5])
        w = TangentVector.at([0.2, 0.1], [1.5, 1.5])
        assert_allclose(spray_coefficients(metric, w), 9.0 * spray_coefficients(metric, v), rtol=1e-10)

    def test_zero_velocity_rejected(self, euclidean):
        with pytest.raises(ValueError):
            spray_coefficients(euclidean, TangentVector.at([0.0, 0.0], [0.0, 0.0]))


class TestGeodesics:

    def test_euclidean_geodesic_is_straight(self, euclidean):
        curve = integrate_geodesic(euclidean, TangentVector.at([0.0, 0.0], [1.0, 2.0]), 1.0, 32)
        assert_allclose(curve.points[-1], [1.0, 2.0], atol=1e-12)
        assert not curve.truncated

    def test_conformal_speed_is_conserved(self):
        metric = ConformalRiemannianMetric.linear([0.3, 0.0])
        curve = integrate_geodesic(metric, TangentVector.at([0.0, 0.0], [0.0, 1.0]), 1.0, 128)
        assert curve.notes["speed_drift"] < 1e-6

    def test_funk_geodesic_is_truncated_at_the_boundary(self):
        curve = integrate_geodesic(FunkMetric(2), TangentVector.at([0.0, 0.0], [1.0, 0.0]), 40.0, 128)
        assert curve.truncated
        assert np.all(np.linalg.norm(curve.points, axis=-1) < 1.0)

    def test_too_few_steps(self, euclidean):
        with pytest.raises(ValueError):
            integrate_geodesic(euclidean, TangentVector.at([0.0, 0.0], [1.0, 0.0]), 1.0, 8)


class TestCurveLength:

    def test_segment_length(self, randers):
        assert curve_length(randers, Curve.segment([0.0, 0.0], [2.0, 0.0])) == pytest.approx(3.0)

    def test_polyline_length_is_exact(self, euclidean):
        curve = Curve.polyline(np.array([[0.0, 0.0], [3.0, 0.0], [3.0, 4.0]]))
        assert curve_length(euclidean, curve) == pytest.approx(7.0)

    def test_reversed_segment_is_shorter_for_randers(self, randers):
        forward = curve_length(randers, Curve.segment([0.0, 0.0], [1.0, 0.0]))
        backward = curve_length(randers, Curve.segment([1.0, 0.0], [0.0, 0.0]))
        assert forward == pytest.approx(1.5)
        assert backward == pytest.approx(0.5)


class TestDistance:

    def test_stencil_sizes(self):
        assert stencil_offsets(1).shape == (2, 1)
        assert stencil_offsets(2).shape == (16, 2)
        assert stencil_offsets(3).shape == (26, 3)

    def test_identical_points(self, randers):
        assert distance(randers, [0.2, 0.2], [0.2, 0.2]) == 0.0

    def test_randers_is_asymmetric(self, randers):
        assert distance(randers, [0.0, 0.0], [1.0, 0.0]) == pytest.approx(1.5)
        assert distance(randers, [1.0, 0.0], [0.0, 0.0]) == pytest.approx(0.5)

    def test_randers_grid_dijkstra_on_axis(self, randers):
        provider = DistanceProvider("grid_dijkstra", 64)
        assert distance(randers, [0.0, 0.0], [1.0, 0.0], provider) == pytest.approx(1.5, rel=1e-9)
        assert distance(randers, [1.0, 0.0], [0.0, 0.0], provider) == pytest.approx(0.5, rel=1e-9)

    def test_funk_closed_form(self):
        assert distance(FunkMetric(2), [0.0, 0.0], [0.5, 0.0]) == pytest.approx(math.log(2.0))

    def test_funk_grid_dijkstra_converges(self):
        metric = FunkMetric(2)
        coarse = abs(distance(metric, [0.0, 0.0], [0.5, 0.0], DistanceProvider("grid_dijkstra", 32)) - math.log(2.0))
        fine = abs(distance(metric, [0.0, 0.0], [0.5, 0.0], DistanceProvider("grid_dijkstra", 128)) - math.log(2.0))
        assert fine < 1e-3
        assert fine <= coarse

    def test_curve_descent_off_lattice(self, euclidean):
        provider = DistanceProvider("curve_descent", 32)
        assert distance(euclidean, [0.0, 0.0], [3.0, 4.0], provider) == pytest.approx(5.0, rel=1e-4)

    def test_closed_form_unavailable(self):
        metric = ConformalRiemannianMetric.linear([0.3, 0.0])
        with pytest.raises(ValueError):
            distance(metric, [0.0, 0.0], [1.0, 0.0], DistanceProvider("closed_form"))

    def test_auto_provider(self, randers):
        assert DistanceProvider.auto(randers).tier == "closed_form"
        assert DistanceProvider.auto(ConformalRiemannianMetric.linear([0.3, 0.0])).tier == "grid_dijkstra"

    def test_grid_size_rounded_to_multiple_of_four(self):
        assert DistanceProvider("grid_dijkstra", 30).grid_n == 32

    def test_distance_field_matches_pointwise(self, randers):
        points = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 2.0]])
        assert_allclose(distance_field(randers, [0.0, 0.0], points), [1.5, 0.5, 2.0])

    def test_forward_ball_depends_on_direction(self, randers):
        assert forward_ball_indicator(randers, [1.0, 0.0], 1.0, [0.0, 0.0])
        assert not forward_ball_indicator(randers, [0.0, 0.0], 1.0, [1.0, 0.0])

    def test_conformal_grid_distance_close_to_euclidean_bound(self):
        metric = ConformalRiemannianMetric.linear([0.1, 0.0])
        value = distance(metric, [0.0, 0.0], [0.0, 1.0], DistanceProvider("grid_dijkstra", 64))
        # the vertical segment at x1 = 0 has length exactly 1
        assert 0.9 < value <= 1.0 + 1e-9


def _disk_points(rng, count, radius):
    """Uniform points of the open disk of the given radius."""
    r = radius * np.sqrt(rng.uniform(0.0, 1.0, count))
    phi = rng.uniform(0.0, 2.0 * math.pi, count)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi)])


class TestDistanceProperties:

    METRICS = {
        "randers": (lambda: RandersMetric(2, [0.5, 0.0]), 2.0),
        "randers-tilted": (lambda: RandersMetric(2, [0.2, -0.4], [[2.0, 0.3], [0.3, 1.0]]), 2.0),
        "funk": (lambda: FunkMetric(2), 0.8),
        "reversed-funk": (lambda: reverse_metric(FunkMetric(2)), 0.8),
    }

    @pytest.mark.parametrize("name", sorted(METRICS))
    def test_oriented_triangle_inequality(self, name):
        make, radius = self.METRICS[name]
        metric = make()
        rng = np.random.default_rng(5)
        triples = _disk_points(rng, 3 * 120, radius).reshape(120, 3, 2)
        for x1, x2, x3 in triples:
            direct = distance(metric, x1, x3)
            assert direct <= distance(metric, x1, x2) + distance(metric, x2, x3) + 1e-12
            assert direct >= 0.0

    @pytest.mark.parametrize("name", ["randers", "randers-tilted", "funk"])
    def test_reversal_duality_closed_form(self, name):
        make, radius = self.METRICS[name]
        metric = make()
        reversed_metric = reverse_metric(metric)
        rng = np.random.default_rng(8)
        for x1, x2 in _disk_points(rng, 2 * 50, radius).reshape(50, 2, 2):
            assert distance(reversed_metric, x1, x2) == pytest.approx(distance(metric, x2, x1), rel=1e-12)

    def test_reversal_duality_grid_dijkstra(self):
        metric = FunkMetric(2)
        provider = DistanceProvider("grid_dijkstra", 128)
        x1, x2 = [0.0, 0.0], [0.5, 0.0]
        backward = distance(reverse_metric(metric), x1, x2, provider)
        forward = distance(metric, x2, x1, provider)
        assert backward == pytest.approx(forward, abs=2e-3)
        assert forward == pytest.approx(math.log(1.5), abs=1e-3)


class TestGridConvergence:
    """grid_dijkstra against closed forms as the grid doubles from 64 to 256."""

    RESOLUTIONS = (64, 128, 256)

    def _values(self, metric, x1, x2):
        return [distance(metric, x1, x2, DistanceProvider("grid_dijkstra", n)) for n in self.RESOLUTIONS]

    @pytest.mark.parametrize("x1, x2, expected", [([0.0, 0.0], [1.0, 0.0], 1.5), ([1.0, 0.0], [0.0, 0.0], 0.5)])
    def test_randers_pair(self, randers, x1, x2, expected):
        assert_allclose(self._values(randers, x1, x2), expected, rtol=1e-9)

    def test_funk_log_two(self):
        errors = [abs(v - math.log(2.0)) for v in self._values(FunkMetric(2), [0.0, 0.0], [0.5, 0.0])]
        assert errors[0] >= errors[1] >= errors[2]
        assert errors[2] < 1e-2

    def test_euclidean_polyline_never_undercuts(self, euclidean):
        values = self._values(euclidean, [0.0, 0.0], [3.0, 4.0])
        assert all(v >= 5.0 - 1e-12 for v in values)
        assert values[1] <= values[0] + 1e-12
        assert values[2] <= values[1] + 1e-12
        # the 16-neighbour stencil cannot follow a (3, 4) heading exactly
        assert values[2] == pytest.approx(5.0, rel=2e-2)


class TestChart:

    def test_funk_target_outside_chart(self):
        with pytest.raises(MetricDomainError):
            distance(FunkMetric(2), [0.0, 0.0], [2.0, 0.0], DistanceProvider("grid_dijkstra", 32))


def test_euclidean_dimension_one():
    metric = EuclideanMetric(1)
    assert distance(metric, [0.0], [2.5]) == pytest.approx(2.5)
    assert distance(metric, [0.0], [2.5], DistanceProvider("grid_dijkstra", 16)) == pytest.approx(2.5)
