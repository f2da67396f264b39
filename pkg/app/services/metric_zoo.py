"""
Finsler structures and the metric zoo.

This module defines the ``FinslerMetric`` abstraction and the concrete
metrics with known closed forms (Euclidean, conformal Riemannian, Randers,
Funk and the quartic perturbation of the Euclidean norm) that serve as
oracles for the rest of the toolkit.

All metric methods broadcast over leading axes: ``x`` and ``y`` carry
their coordinates on the last axis.
"""

import logging
from abc import ABC, abstractmethod
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from ..models.domain import FiberQuadrature
from ..models.geometry import Point, SUPPORTED_DIMENSIONS, TangentVector
from ..schemas.check import HomogeneityReport, MetricCheckReport
from ..utils.errors import MetricDomainError, MetricValidityError
from ..utils.numerics import gradient_x, hessian_y, mixed_xy, unit_vectors


logger = logging.getLogger(__name__)

MatrixField = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]
CovectorField = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


class FinslerMetric(ABC):
    """
    A Finsler structure F on a single chart of M.

    Subclasses implement ``F``; the fundamental tensor and spray fall back
    to finite differences when no closed form is provided.

    Attributes:
        kind: Zoo name of the metric
        dimension: n
        reversible: True when F(x, -y) = F(x, y)
        x_independent: True for Minkowski norms (F does not depend on x)
    """

    kind: str = "abstract"
    reversible: bool = False
    x_independent: bool = False
    riemannian: bool = False

    def __init__(self, dimension: int):
        if dimension not in SUPPORTED_DIMENSIONS:
            raise MetricValidityError(f"dimension must be 1, 2 or 3, got {dimension}")
        self.dimension = int(dimension)

    # -- evaluation ---------------------------------------------------------

    @abstractmethod
    def _F(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """F(x, y) without domain checks."""

    def F(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        self.check_domain(x)
        return self._F(x, y)

    def contains(self, x) -> np.ndarray:
        """Mask of points inside the chart of the metric."""
        x = np.asarray(x, dtype=float)
        return np.all(np.isfinite(x), axis=-1)

    def check_domain(self, x: np.ndarray) -> None:
        inside = self.contains(x)
        if not np.all(inside):
            bad = np.asarray(x)[~np.asarray(inside)] if np.ndim(inside) else np.asarray(x)
            raise MetricDomainError(f"{self.kind} metric queried outside its chart at {np.atleast_2d(bad)[0].tolist()}")

    # -- derived tensors ----------------------------------------------------

    def fundamental_tensor(self, x, y) -> np.ndarray:
        """g_ij = 1/2 [F^2]_{y^i y^j}, shape (..., n, n)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        self.check_domain(x)
        _, direction = unit_vectors(y)
        g = self._fundamental_tensor(x, direction)
        return assert_spd(g, self.kind)

    def _fundamental_tensor(self, x: np.ndarray, direction: np.ndarray) -> np.ndarray:
        return hessian_y(lambda xs, ys: 0.5 * self._F(xs, ys) ** 2, x, direction)

    def spray(self, x, y) -> np.ndarray:
        """Spray coefficients G^i(x, y), shape (..., n)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        self.check_domain(x)
        x, y = np.broadcast_arrays(x, y)
        if self.x_independent:
            return np.zeros(y.shape)
        return self._spray(x, y)

    def _spray(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return finite_difference_spray(self, x, y)

    # -- distance -----------------------------------------------------------

    @property
    def has_closed_form_distance(self) -> bool:
        return self.x_independent

    def closed_form_distance(self, x1, x2) -> np.ndarray:
        """Forward distance d(x1, x2); broadcasts over both arguments."""
        if not self.x_independent:
            raise NotImplementedError(f"{self.kind} metric has no closed-form distance")
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        return self.F(x1, x2 - x1)

    # -- structure ----------------------------------------------------------

    def reverse(self) -> "FinslerMetric":
        return ReversedMetric(self)

    def default_bounds(self):
        """Chart box used when a grid has to cover the whole chart."""
        return (-1.0,) * self.dimension, (1.0,) * self.dimension

    def describe(self) -> str:
        return self.kind

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.describe()} n={self.dimension}>"


def assert_spd(g: np.ndarray, kind: str) -> np.ndarray:
    """Symmetrise ``g`` and confirm positive definiteness by Cholesky factorisation."""
    g = 0.5 * (g + np.swapaxes(g, -1, -2))
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise MetricValidityError(f"{kind} fundamental tensor is not positive definite") from exc
    return g


def finite_difference_spray(metric: FinslerMetric, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """
    G^i = 1/4 g^{il} ([F^2]_{x^k y^l} y^k - [F^2]_{x^l}) by finite differences.

    Evaluated on the Euclidean-normalised direction and rescaled by |y|^2.
    """
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    norm, direction = unit_vectors(y)

    def f2(xs, ys):
        return metric._F(xs, ys) ** 2

    mixed = mixed_xy(f2, x, direction)
    dx = gradient_x(f2, x, direction)
    rhs = np.einsum("...lk,...k->...l", mixed, direction) - dx
    g = metric._fundamental_tensor(x, direction)
    G = 0.25 * np.linalg.solve(g, rhs[..., None])[..., 0]
    return G * (norm**2)[..., None]


# ---------------------------------------------------------------------------
# Zoo
# ---------------------------------------------------------------------------

class EuclideanMetric(FinslerMetric):
    """F(x, y) = scale * |y|."""

    kind = "euclidean"
    reversible = True
    x_independent = True
    riemannian = True

    def __init__(self, dimension: int = 2, scale: float = 1.0):
        super().__init__(dimension)
        if not scale > 0.0:
            raise MetricValidityError("Euclidean scale must be positive")
        self.scale = float(scale)

    def _F(self, x, y):
        return self.scale * np.linalg.norm(y, axis=-1)

    def _fundamental_tensor(self, x, direction):
        shape = np.broadcast_shapes(np.shape(x), np.shape(direction))[:-1]
        return np.broadcast_to(self.scale**2 * np.eye(self.dimension), shape + (self.dimension,) * 2).copy()

    def reverse(self):
        return self

    def describe(self):
        return "euclidean" if self.scale == 1.0 else f"euclidean(scale={self.scale:g})"


class ConformalRiemannianMetric(FinslerMetric):
    """F(x, y) = exp(lambda(x)) |y|."""

    kind = "conformal"
    reversible = True
    riemannian = True

    def __init__(
        self,
        dimension: int,
        lam: Callable[[np.ndarray], np.ndarray],
        lam_grad: Callable[[np.ndarray], np.ndarray],
        label: str = "lambda",
    ):
        super().__init__(dimension)
        self.lam = lam
        self.lam_grad = lam_grad
        self.label = label

    @classmethod
    def linear(cls, coefficients: Sequence[float]) -> "ConformalRiemannianMetric":
        """lambda(x) = c . x."""
        c = np.asarray(coefficients, dtype=float)
        return cls(
            c.shape[0],
            lambda x: np.asarray(x, float) @ c,
            lambda x: np.broadcast_to(c, np.shape(x)).copy(),
            label=f"lambda={c.tolist()}.x",
        )

    def _F(self, x, y):
        return np.exp(self.lam(x)) * np.linalg.norm(y, axis=-1)

    def _fundamental_tensor(self, x, direction):
        x, direction = np.broadcast_arrays(x, direction)
        return np.exp(2.0 * self.lam(x))[..., None, None] * np.eye(self.dimension)

    def _spray(self, x, y):
        grad = self.lam_grad(x)
        along = np.sum(grad * y, axis=-1)
        return along[..., None] * y - 0.5 * np.sum(y * y, axis=-1)[..., None] * grad

    def reverse(self):
        return self

    def describe(self):
        return f"conformal({self.label})"


class RandersMetric(FinslerMetric):
    """
    F(x, y) = sqrt(a_x(y, y)) + b_x(y).

    ``a`` and ``b`` are constants or callables of x. Positivity needs
    |b|_a < 1, which is checked at construction over ``sample_points``
    (exactly when both are constant).
    """

    kind = "randers"

    def __init__(
        self,
        dimension: int,
        b: CovectorField,
        a: Optional[MatrixField] = None,
        sample_points: Optional[np.ndarray] = None,
    ):
        super().__init__(dimension)
        self._a = np.eye(dimension) if a is None else a
        self._b = b
        self.x_independent = not callable(self._a) and not callable(self._b)
        if not callable(self._b):
            self._b = np.asarray(self._b, dtype=float)
            if self._b.shape != (dimension,):
                raise MetricValidityError(f"Randers b must have {dimension} components")
        if not callable(self._a):
            self._a = np.asarray(self._a, dtype=float)
            assert_spd(self._a, "randers a")
        self.reversible = not callable(self._b) and not np.any(self._b)
        if sample_points is None:
            sample_points = np.zeros((1, dimension)) if self.x_independent else _box_samples(dimension)
        norms = self.b_norm(np.asarray(sample_points, float))
        if not np.all(norms < 1.0):
            raise MetricValidityError(f"Randers |b|_a must stay below 1, found {float(np.max(norms)):.6g}")

    def a(self, x):
        if callable(self._a):
            return np.asarray(self._a(x), float)
        return np.broadcast_to(self._a, np.shape(x)[:-1] + self._a.shape)

    def b(self, x):
        if callable(self._b):
            return np.asarray(self._b(x), float)
        return np.broadcast_to(self._b, np.shape(x))

    def b_norm(self, x) -> np.ndarray:
        """|b|_a = sqrt(b a^{-1} b) at ``x``."""
        a = self.a(x)
        b = self.b(x)
        return np.sqrt(np.einsum("...i,...i->...", b, np.linalg.solve(a, b[..., None])[..., 0]))

    def _alpha(self, x, y):
        return np.sqrt(np.einsum("...i,...ij,...j->...", y, self.a(x), y))

    def _F(self, x, y):
        x, y = np.broadcast_arrays(x, y)
        return self._alpha(x, y) + np.sum(self.b(x) * y, axis=-1)

    def _fundamental_tensor(self, x, direction):
        x, y = np.broadcast_arrays(x, direction)
        a = self.a(x)
        b = self.b(x)
        alpha = self._alpha(x, y)
        F = alpha + np.sum(b * y, axis=-1)
        alpha_y = np.einsum("...ij,...j->...i", a, y) / alpha[..., None]
        ell = alpha_y + b
        ratio = (F / alpha)[..., None, None]
        return ratio * (a - alpha_y[..., :, None] * alpha_y[..., None, :]) + ell[..., :, None] * ell[..., None, :]

    def reverse(self):
        if callable(self._b):
            b = self._b
            return RandersMetric(self.dimension, lambda x: -b(x), self._a)
        return RandersMetric(self.dimension, -self._b, self._a)

    def describe(self):
        if callable(self._b):
            return "randers(b=field)"
        return f"randers(b={[float(v) for v in self._b]})"


class FunkMetric(FinslerMetric):
    """
    The Funk metric of the open unit ball.

    F(x, y) = (sqrt(|y|^2 - (|x|^2 |y|^2 - <x, y>^2)) + <x, y>) / (1 - |x|^2),
    defined for |x| <= 1 - 1e-9.
    """

    kind = "funk"
    GUARD = 1e-9

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return np.linalg.norm(x, axis=-1) <= 1.0 - self.GUARD

    def _F(self, x, y):
        x, y = np.broadcast_arrays(x, y)
        xx = np.sum(x * x, axis=-1)
        yy = np.sum(y * y, axis=-1)
        xy = np.sum(x * y, axis=-1)
        root = np.sqrt(np.maximum(yy * (1.0 - xx) + xy**2, 0.0))
        return (root + xy) / (1.0 - xx)

    def _spray(self, x, y):
        return 0.5 * self._F(x, y)[..., None] * y

    @property
    def has_closed_form_distance(self):
        return True

    def closed_form_distance(self, x1, x2):
        """d(x1, x2) = ln(|x1 - z| / |x2 - z|), z where the ray x1 -> x2 leaves the ball."""
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        self.check_domain(x1)
        self.check_domain(x2)
        x1, x2 = np.broadcast_arrays(x1, x2)
        delta = x2 - x1
        dd = np.sum(delta * delta, axis=-1)
        moving = dd > 0.0
        safe = np.where(moving, dd, 1.0)
        xd = np.sum(x1 * delta, axis=-1)
        c = np.sum(x1 * x1, axis=-1) - 1.0
        t = (-xd + np.sqrt(xd**2 - safe * c)) / safe
        t = np.where(moving, t, 2.0)
        return np.where(moving, np.log(t / (t - 1.0)), 0.0)

    def describe(self):
        return "funk"


class QuarticPerturbedMetric(FinslerMetric):
    """F(x, y)^2 = |y|^2 + epsilon (y^1)^4 / |y|^2, reversible and non-Riemannian."""

    kind = "quartic"
    reversible = True
    x_independent = True
    MAX_EPSILON = 0.2

    def __init__(self, dimension: int = 2, epsilon: float = 0.1):
        super().__init__(dimension)
        if not 0.0 <= epsilon <= self.MAX_EPSILON:
            raise MetricValidityError(f"quartic epsilon must lie in [0, {self.MAX_EPSILON}], got {epsilon}")
        self.epsilon = float(epsilon)

    def _F(self, x, y):
        yy = np.sum(y * y, axis=-1)
        safe = np.where(yy > 0.0, yy, 1.0)
        return np.sqrt(yy + self.epsilon * y[..., 0] ** 4 / safe)

    def reverse(self):
        return self

    def describe(self):
        return f"quartic(epsilon={self.epsilon:g})"


class ReversedMetric(FinslerMetric):
    """F~(x, y) = F(x, -y); geodesics run backwards and d~(x1, x2) = d(x2, x1)."""

    def __init__(self, inner: FinslerMetric):
        super().__init__(inner.dimension)
        self.inner = inner
        self.kind = f"reversed-{inner.kind}"
        self.reversible = inner.reversible
        self.x_independent = inner.x_independent
        self.riemannian = inner.riemannian

    def contains(self, x):
        return self.inner.contains(x)

    def _F(self, x, y):
        return self.inner._F(x, -np.asarray(y, float))

    def _fundamental_tensor(self, x, direction):
        return self.inner._fundamental_tensor(x, -np.asarray(direction, float))

    def _spray(self, x, y):
        return self.inner._spray(x, -y)

    @property
    def has_closed_form_distance(self):
        return self.inner.has_closed_form_distance

    def closed_form_distance(self, x1, x2):
        return self.inner.closed_form_distance(x2, x1)

    def default_bounds(self):
        return self.inner.default_bounds()

    def reverse(self):
        return self.inner

    def describe(self):
        return f"reversed({self.inner.describe()})"


def _box_samples(n: int, per_axis: int = 9) -> np.ndarray:
    axis = np.linspace(-1.0, 1.0, per_axis)
    mesh = np.meshgrid(*([axis] * n), indexing="ij")
    return np.stack(mesh, axis=-1).reshape(-1, n)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def _xy(v: Union[TangentVector, tuple]) -> tuple:
    if isinstance(v, TangentVector):
        return v.base.coords, v.components
    x, y = v
    return np.asarray(x, float), np.asarray(y, float)


def eval_F(metric: FinslerMetric, v: Union[TangentVector, tuple]) -> float:
    """
    Evaluate F at a tangent vector.

    Args:
        metric: Finsler metric
        v: TangentVector or an (x, y) pair of arrays

    Returns:
        Nonnegative F(x, y); arrays broadcast when (x, y) arrays are given

    Raises:
        MetricDomainError: If x lies outside the metric chart
    """
    x, y = _xy(v)
    if not np.all(np.isfinite(y)):
        raise ValueError("tangent vector components must be finite")
    value = metric.F(x, y)
    return float(value) if np.ndim(value) == 0 else value


def fundamental_tensor(metric: FinslerMetric, v: Union[TangentVector, tuple]) -> np.ndarray:
    """SPD fundamental tensor g_ij(x, y) for y != 0."""
    x, y = _xy(v)
    if np.any(np.linalg.norm(y, axis=-1) == 0.0):
        raise ValueError("fundamental tensor needs y != 0")
    return metric.fundamental_tensor(x, y)


def reverse_metric(metric: FinslerMetric) -> FinslerMetric:
    """The reverse metric F~(x, y) = F(x, -y)."""
    return metric.reverse()


def reversibility_defect(metric: FinslerMetric, sample_points: Iterable, directions: int = 256) -> float:
    """
    sup over samples and Euclidean unit directions theta of |F(x, theta) - F(x, -theta)|.

    Args:
        metric: Finsler metric
        sample_points: Nonempty iterable of Points or coordinate arrays
        directions: Fiber directions scanned per point (n >= 2)
    """
    points = _points_array(sample_points, metric.dimension)
    theta = FiberQuadrature.standard(metric.dimension, directions).nodes
    forward = metric.F(points[:, None, :], theta[None, :, :])
    backward = metric.F(points[:, None, :], -theta[None, :, :])
    return float(np.max(np.abs(forward - backward)))


def check_homogeneity(metric: FinslerMetric, samples: Iterable, lambdas: Sequence[float]) -> HomogeneityReport:
    """
    Max relative deviation |F(x, l y) - l F(x, y)| / (l F(x, y)) over samples and lambdas.

    Raises:
        ValueError: If any lambda is not positive
    """
    lambdas = np.asarray(list(lambdas), dtype=float)
    if lambdas.size == 0 or np.any(lambdas <= 0.0):
        raise ValueError("homogeneity lambdas must be positive")
    xs, ys = _tangent_arrays(samples)
    base = metric.F(xs, ys)
    worst = 0.0
    for lam in lambdas:
        scaled = metric.F(xs, lam * ys)
        deviation = np.abs(scaled - lam * base) / (lam * base)
        worst = max(worst, float(np.max(deviation)))
    return HomogeneityReport(max_relative_deviation=worst, samples=int(xs.shape[0]), lambdas=lambdas.tolist())


def validate_metric(metric: FinslerMetric, sample_count: int = 100, seed: int = 0) -> MetricCheckReport:
    """
    Run the metric validity suite on random samples inside the chart.

    Checks positivity, homogeneity, symmetry of g and its smallest eigenvalue.
    """
    rng = np.random.default_rng(seed)
    lo, hi = metric.default_bounds()
    xs = rng.uniform(lo, hi, size=(sample_count * 4, metric.dimension))
    xs = xs[np.asarray(metric.contains(xs))][:sample_count]
    ys = rng.normal(size=(xs.shape[0], metric.dimension))
    values = metric.F(xs, ys)
    homogeneity = check_homogeneity(metric, list(zip(xs, ys)), [0.5, 2.0, 10.0])
    raw = metric._fundamental_tensor(xs, unit_vectors(ys)[1])
    asymmetry = float(np.max(np.abs(raw - np.swapaxes(raw, -1, -2))))
    g = assert_spd(raw, metric.kind)
    min_eigenvalue = float(np.min(np.linalg.eigvalsh(g)))
    logger.info("validated %s on %d samples", metric.describe(), xs.shape[0])
    return MetricCheckReport(
        metric=metric.describe(),
        samples=int(xs.shape[0]),
        min_F=float(np.min(values)),
        max_homogeneity_deviation=homogeneity.max_relative_deviation,
        max_asymmetry=asymmetry,
        min_eigenvalue=min_eigenvalue,
        valid=bool(np.min(values) > 0.0 and min_eigenvalue > 0.0 and homogeneity.max_relative_deviation <= 1e-12),
    )


def _points_array(points: Iterable, n: int) -> np.ndarray:
    rows = [p.coords if isinstance(p, Point) else np.asarray(p, float) for p in points]
    if not rows:
        raise ValueError("sample set must not be empty")
    return np.asarray(rows, dtype=float).reshape(-1, n)


def _tangent_arrays(samples: Iterable) -> tuple:
    xs, ys = [], []
    for sample in samples:
        x, y = _xy(sample)
        xs.append(x)
        ys.append(y)
    if not xs:
        raise ValueError("sample set must not be empty")
    return np.asarray(xs, float), np.asarray(ys, float)


def build_metric(kind: str, dimension: int = 2, b=None, a=None, epsilon=None, lam=None, scale: float = 1.0) -> FinslerMetric:
    """
    Construct a zoo metric from configuration values.

    Args:
        kind: euclidean, conformal, randers, funk or quartic
        dimension: n
        b: Randers covector
        a: Randers SPD matrix (defaults to identity)
        epsilon: Quartic perturbation strength
        lam: Conformal linear coefficients (lambda(x) = lam . x)
        scale: Euclidean scale

    Returns:
        FinslerMetric: The configured metric
    """
    if kind == "euclidean":
        return EuclideanMetric(dimension, scale)
    if kind == "conformal":
        return ConformalRiemannianMetric.linear(lam if lam is not None else [0.3] + [0.0] * (dimension - 1))
    if kind == "randers":
        if b is None:
            raise ValueError("randers metric needs b")
        return RandersMetric(dimension, np.asarray(b, float), None if a is None else np.asarray(a, float))
    if kind == "funk":
        return FunkMetric(dimension)
    if kind == "quartic":
        return QuarticPerturbedMetric(dimension, 0.1 if epsilon is None else epsilon)
    raise ValueError(f"unknown metric kind '{kind}'")


__all__ = [
    "FinslerMetric",
    "EuclideanMetric",
    "ConformalRiemannianMetric",
    "RandersMetric",
    "FunkMetric",
    "QuarticPerturbedMetric",
    "ReversedMetric",
    "assert_spd",
    "finite_difference_spray",
    "eval_F",
    "fundamental_tensor",
    "reverse_metric",
    "reversibility_defect",
    "check_homogeneity",
    "validate_metric",
    "build_metric",
]
