import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.models.domain import Domain, FiberQuadrature
from app.models.field import ScalarField, bump, constant, gaussian, sine, step
from app.services.approximation import (
    MollifierSpec,
    boundary_translate,
    boundary_translation_experiment,
    chartwise_approximation,
    density_experiment,
    kernel_stencil,
    leibniz_bound_defect,
    mollification_convergence,
    mollifier_kernel,
    mollify,
    partition_of_unity,
    truncate,
    truncation_profile,
)
from app.services.metric_zoo import EuclideanMetric, RandersMetric
from app.services.spray_geodesics import DistanceProvider
from app.utils.errors import CoverError, MollifierResolutionError


class TestTruncation:

    def test_profile(self):
        assert_allclose(truncation_profile([-1.0, 0.0, 0.25, 1.0, 3.0]), [1.0, 1.0, 0.75, 0.0, 0.0])

    def test_truncate_constant_in_euclidean_plane(self, euclidean):
        phi_1 = truncate(constant(1.0), euclidean, [0.0, 0.0], 1)
        points = np.array([[0.5, 0.0], [1.5, 0.0], [0.0, 3.0]])
        assert_allclose(phi_1(points), [1.0, 0.5, 0.0])

    def test_truncate_uses_forward_distance(self, randers):
        phi_1 = truncate(constant(1.0), randers, [0.0, 0.0], 1)
        # d(0, (1.2, 0)) = 1.8 and d(0, (-1.2, 0)) = 0.6
        assert_allclose(phi_1(np.array([[1.2, 0.0], [-1.2, 0.0]])), [0.2, 1.0])

    def test_truncated_gradient_on_annulus(self, euclidean):
        phi_1 = truncate(constant(1.0), euclidean, [0.0, 0.0], 1)
        assert_allclose(phi_1.grad(np.array([[1.5, 0.0]])), [[-1.0, 0.0]], atol=1e-6)

    def test_index_must_be_positive(self, euclidean):
        with pytest.raises(ValueError):
            truncate(constant(1.0), euclidean, [0.0, 0.0], 0)

    def test_leibniz_bound_holds(self, randers):
        rng = np.random.default_rng(3)
        points = rng.uniform(-3.0, 3.0, size=(200, 2))
        assert leibniz_bound_defect(gaussian(), randers, [0.0, 0.0], 1, points) <= 1e-6


class TestDensity:

    RULE = FiberQuadrature.standard(2, 16)

    def _h1p(self, metric, u, jmax):
        domain = Domain.box([-6.0, -6.0], [6.0, 6.0], 64)
        return density_experiment(metric, u, 2.0, jmax, DistanceProvider("closed_form"), self.RULE, domain)

    def test_errors_shrink_with_j(self, euclidean):
        table = self._h1p(euclidean, gaussian(), 4)
        h1p = table.column("h1p")
        assert table.columns == ["j", "lp_sm", "grad_lp_sm", "h1p"]
        assert all(b <= a for a, b in zip(h1p, h1p[1:]))
        assert h1p[0] > h1p[2]
        assert h1p[3] < 1e-3
        assert table.metadata["provider"] == "closed_form"
        assert "truncation" in table.metadata

    def test_randers_density(self, randers):
        h1p = self._h1p(randers, gaussian(), 5).column("h1p")
        assert all(b <= a for a, b in zip(h1p, h1p[1:]))
        # B+(0, j) only reaches x^1 = j / 1.5 downwind, so j = 4 still cuts the Gaussian near 8e-4
        assert h1p[3] < 2e-3
        assert h1p[4] < 1e-3

    @pytest.mark.parametrize("metric", [EuclideanMetric(2), RandersMetric(2, [0.5, 0.0])], ids=["euclidean", "randers"])
    def test_field_inside_first_ball_is_untouched(self, metric):
        table = self._h1p(metric, bump(0.5), 3)
        assert table.column("h1p") == [0.0, 0.0, 0.0]


class TestMollifier:

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_kernel_has_unit_mass(self, n):
        spec = MollifierSpec(0.5, n)
        h = 0.5 / 40 if n < 3 else 0.5 / 16
        stencil = kernel_stencil(spec, np.full(n, h))
        assert stencil.sum() == pytest.approx(1.0)
        assert mollifier_kernel(spec, np.zeros(n)) > 0.0

    def test_kernel_vanishes_outside_support(self):
        spec = MollifierSpec(0.25, 2)
        assert mollifier_kernel(spec, [0.3, 0.0]) == 0.0

    def test_step_is_half_on_the_jump(self):
        domain = Domain.box([-1.0, -1.0], [1.0, 1.0], 80)
        v = mollify(step(), MollifierSpec(0.25, 2), domain)
        assert v(np.array([[0.0, 0.0]]))[0] == pytest.approx(0.5, abs=1e-6)
        assert v(np.array([[0.5, 0.0]]))[0] == pytest.approx(1.0, abs=1e-12)

    def test_refuses_coarse_grid(self):
        domain = Domain.box([-1.0, -1.0], [1.0, 1.0], 8)
        with pytest.raises(MollifierResolutionError):
            mollify(gaussian(), MollifierSpec(0.25, 2), domain)

    def test_convergence_table(self):
        domain = Domain.box([-3.0, -3.0], [3.0, 3.0], 32)
        table = mollification_convergence(gaussian(), 2.0, [0.4, 0.2, 0.1], domain)
        lp = table.column("lp_err")
        assert lp[0] > lp[1] > lp[2]
        assert all(ratio <= 1.0 + 1e-12 for ratio in table.column("young_ratio"))
        # second-order decay for a smooth field
        assert lp[1] / lp[2] == pytest.approx(4.0, rel=0.2)

    def test_torus_wraps(self):
        domain = Domain.torus([2.0, 2.0], 64)
        v = mollify(sine(), MollifierSpec(0.2, 2), domain)
        # a Fourier mode is an eigenfunction of convolution: J * sin = m sin with 0 < m < 1
        x = domain.nodes()
        ratio = v.samples()[np.abs(sine()(x)) > 0.5] / sine()(x)[np.abs(sine()(x)) > 0.5]
        assert np.ptp(ratio) < 1e-6
        assert 0.0 < ratio[0] < 1.0


class TestBoundaryTranslation:

    def test_translate_shifts_first_axis(self):
        h = boundary_translate(gaussian(), 4)
        assert h(np.array([[0.25, 0.0]]))[0] == pytest.approx(1.0)

    def test_experiment_converges(self):
        table = boundary_translation_experiment(bump(0.5, [-0.4, 0.0]), [2, 4, 8, 16], 2.0, Domain.half_ball(1.0, 2, 96))
        errors = table.column("h1p_err")
        assert all(a > b for a, b in zip(errors, errors[1:]))

    def test_translation_reads_only_the_negative_side(self):
        # (-x^1)^{3/2} is C^1 on the closed half-space {x^1 <= 0} and undefined beyond it
        u = ScalarField(
            value=lambda x: np.power(-x[..., 0], 1.5),
            gradient=lambda x: np.stack([-1.5 * np.sqrt(-x[..., 0]), np.zeros(x.shape[:-1])], axis=-1),
            name="corner",
        )
        table = boundary_translation_experiment(u, [2, 4, 8], 2.0, Domain.half_ball(1.0, 2, 64))
        errors = table.column("h1p_err")
        assert all(np.isfinite(errors))
        assert errors[0] > errors[1] > errors[2]


class TestPartitionOfUnity:

    COVER = [([-1.2, -1.2], [0.3, 1.2]), ([-0.3, -1.2], [1.2, 1.2])]

    def test_sums_to_one(self):
        alphas = partition_of_unity(self.COVER, ([-1.0, -1.0], [1.0, 1.0]))
        points = np.random.default_rng(0).uniform(-1.0, 1.0, size=(500, 2))
        assert_allclose(sum(alpha(points) for alpha in alphas), 1.0, atol=1e-12)
        assert_allclose(sum(alpha.grad(points) for alpha in alphas), 0.0, atol=1e-9)

    def test_supports_are_subordinate(self):
        alphas = partition_of_unity(self.COVER)
        assert alphas[0](np.array([[0.5, 0.0]]))[0] == 0.0
        assert alphas[1](np.array([[-0.5, 0.0]]))[0] == 0.0

    def test_sums_to_one_next_to_box_edges(self):
        alphas = partition_of_unity(self.COVER)
        # inside both boxes, 1e-4 below their common top edge
        points = np.array([[0.0, 1.2 - 1e-4], [-0.29, -1.2 + 1e-4], [0.29, 1.2 - 1e-5]])
        assert_allclose(sum(alpha(points) for alpha in alphas), 1.0, atol=1e-12)
        assert np.all(np.isfinite(sum(alpha.grad(points) for alpha in alphas)))

    def test_region_hugging_the_only_box_is_covered(self):
        margin = 1e-4
        region = ([-1.0 + margin, -1.0 + margin], [1.0 - margin, 1.0 - margin])
        (alpha,) = partition_of_unity([([-1.0, -1.0], [1.0, 1.0])], region)
        assert_allclose(alpha(np.array([[1.0 - margin, -1.0 + margin], [0.0, 0.0]])), [1.0, 1.0])

    def test_uncovered_region(self):
        with pytest.raises(CoverError):
            partition_of_unity([([-1.0, -1.0], [0.0, 1.0])], ([-1.0, -1.0], [1.0, 1.0]))

    def test_chartwise_approximation_converges(self):
        domain = Domain.box([-1.0, -1.0], [1.0, 1.0], 32)
        table = chartwise_approximation(gaussian(), self.COVER, [0.2, 0.1], domain)
        lp = table.column("lp_err")
        assert lp[1] < lp[0]
        assert table.metadata["charts"] == "2"


def test_kernel_integrates_to_one():
    spec = MollifierSpec(1.0, 2)
    h = 0.005
    axis = np.arange(-1.0 + 0.5 * h, 1.0, h)
    grid = np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1)
    assert np.sum(mollifier_kernel(spec, grid)) * h * h == pytest.approx(1.0, rel=1e-4)
