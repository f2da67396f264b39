"""
Spray coefficients, geodesics, curve length and forward distance.

Distances come from one of three providers:

- ``closed_form``: the zoo metric's exact formula;
- ``grid_dijkstra``: shortest directed paths on a stencil graph whose edge
  weights are F(midpoint, step), so irreversible metrics are handled by the
  edge direction;
- ``curve_descent``: the Dijkstra path resampled to a polyline and shortened
  by quasi-Newton minimisation of its length with the endpoints fixed.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Literal, Union

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import minimize
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from ..models.geometry import Curve, Point, TangentVector
from ..utils.errors import MetricDomainError, UnreachableError
from .metric_zoo import FinslerMetric


logger = logging.getLogger(__name__)

PointLike = Union[Point, np.ndarray, list, tuple]
Tier = Literal["closed_form", "grid_dijkstra", "curve_descent"]


@dataclass(frozen=True)
class DistanceProvider:
    """
    Selects how forward distances are computed.

    Attributes:
        tier: closed_form, grid_dijkstra or curve_descent
        grid_n: Grid cells along the longest axis of the Dijkstra grid
        descent_iters: Maximum quasi-Newton iterations for curve_descent
        descent_vertices: Polyline vertices used by curve_descent
    """
    tier: Tier = "closed_form"
    grid_n: int = 128
    descent_iters: int = 200
    descent_vertices: int = 33

    def __post_init__(self):
        if self.tier not in ("closed_form", "grid_dijkstra", "curve_descent"):
            raise ValueError(f"unknown distance tier '{self.tier}'")
        if self.grid_n < 8:
            raise ValueError("grid resolution must be at least 8 per axis")
        if self.descent_iters < 1:
            raise ValueError("descent needs at least one iteration")
        if self.descent_vertices < 3:
            raise ValueError("descent polyline needs at least 3 vertices")
        if self.grid_n % 4:
            object.__setattr__(self, "grid_n", self.grid_n + 4 - self.grid_n % 4)

    @classmethod
    def auto(cls, metric: FinslerMetric, grid_n: int = 128) -> "DistanceProvider":
        """closed_form when the metric has one, grid_dijkstra otherwise."""
        if metric.has_closed_form_distance:
            return cls("closed_form", grid_n)
        return cls("grid_dijkstra", grid_n)

    def describe(self) -> str:
        if self.tier == "closed_form":
            return "closed_form"
        if self.tier == "grid_dijkstra":
            return f"grid_dijkstra(n={self.grid_n})"
        return f"curve_descent(n={self.grid_n},iters={self.descent_iters})"


def _coords(p: PointLike) -> np.ndarray:
    return p.coords if isinstance(p, Point) else np.asarray(p, dtype=float)


# ---------------------------------------------------------------------------
# Spray and geodesics
# ---------------------------------------------------------------------------

def spray_coefficients(metric: FinslerMetric, v: Union[TangentVector, tuple]) -> np.ndarray:
    """
    Spray coefficients G^i(x, y), 2-homogeneous in y.

    Raises:
        ValueError: If y = 0
        MetricValidityError: If g is singular
    """
    if isinstance(v, TangentVector):
        x, y = v.base.coords, v.components
    else:
        x, y = (np.asarray(a, dtype=float) for a in v)
    if np.any(np.linalg.norm(y, axis=-1) == 0.0):
        raise ValueError("spray coefficients need y != 0")
    return metric.spray(x, y)


def integrate_geodesic(metric: FinslerMetric, start: TangentVector, T: float, steps: int) -> Curve:
    """
    Integrate x'' + 2 G(x, x') = 0 with classical fixed-step RK4.

    Args:
        metric: Finsler metric
        start: Initial point and velocity (velocity != 0)
        T: Final parameter
        steps: Number of RK4 steps (>= 16)

    Returns:
        Curve: Samples at every step; ``truncated`` is set when the curve left
        the metric chart, and ``notes['speed_drift']`` holds the relative drift
        of F(sigma, sigma') along the returned samples
    """
    if steps < 16:
        raise ValueError("geodesic integration needs at least 16 steps")
    if not T > 0.0:
        raise ValueError("geodesic parameter range must be positive")
    if not np.any(start.components):
        raise ValueError("geodesic start velocity must be nonzero")

    h = T / steps
    x = start.base.coords.copy()
    y = start.components.copy()
    metric.check_domain(x)

    def rhs(xs, ys):
        return ys, -2.0 * metric.spray(xs, ys)

    ts, xs, ys = [0.0], [x.copy()], [y.copy()]
    truncated = False
    for i in range(steps):
        try:
            k1x, k1y = rhs(x, y)
            k2x, k2y = rhs(x + 0.5 * h * k1x, y + 0.5 * h * k1y)
            k3x, k3y = rhs(x + 0.5 * h * k2x, y + 0.5 * h * k2y)
            k4x, k4y = rhs(x + h * k3x, y + h * k3y)
            x_next = x + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
            y_next = y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
            metric.check_domain(x_next)
        except MetricDomainError:
            truncated = True
            logger.warning("geodesic left the %s chart at t=%.6g", metric.kind, (i + 1) * h)
            break
        x, y = x_next, y_next
        ts.append((i + 1) * h)
        xs.append(x.copy())
        ys.append(y.copy())

    curve = Curve(np.asarray(ts), np.asarray(xs), np.asarray(ys), truncated=truncated)
    speed = metric.F(curve.points, curve.velocities)
    curve.notes["speed_drift"] = float(np.max(np.abs(speed - speed[0])) / speed[0])
    return curve


def curve_length(metric: FinslerMetric, curve: Curve) -> float:
    """
    L(sigma) = integral of F(sigma, sigma') dt.

    Polylines are summed exactly segment by segment with midpoint base points;
    sampled curves use the composite trapezoid rule on their parameters.
    """
    if curve.t.shape[0] < 2:
        raise ValueError("curve length needs at least two samples")
    if curve.is_polyline:
        return _polyline_length(metric, curve.points)
    speed = metric.F(curve.points, curve.velocities)
    return float(trapezoid(speed, curve.t))


def _polyline_length(metric: FinslerMetric, vertices: np.ndarray) -> float:
    mids = 0.5 * (vertices[1:] + vertices[:-1])
    return float(np.sum(metric.F(mids, np.diff(vertices, axis=0))))


# ---------------------------------------------------------------------------
# Grid Dijkstra
# ---------------------------------------------------------------------------

def stencil_offsets(n: int) -> np.ndarray:
    """2 (n=1), 16 (n=2) or 26 (n=3) neighbour offsets."""
    if n == 1:
        return np.array([[1], [-1]])
    if n == 2:
        offsets = [
            (i, j) for i in range(-2, 3) for j in range(-2, 3)
            if (i, j) != (0, 0) and math.gcd(abs(i), abs(j)) == 1
        ]
        return np.array(offsets)
    return np.array([o for o in itertools.product((-1, 0, 1), repeat=3) if any(o)])


@dataclass
class _SourceGrid:
    """Dijkstra sweep from one source over an anchored grid."""
    origin: np.ndarray
    h: float
    index_lo: np.ndarray
    shape: tuple
    active: np.ndarray
    dist: np.ndarray
    predecessors: np.ndarray

    def coords(self, index: np.ndarray) -> np.ndarray:
        return self.origin + (index + self.index_lo) * self.h


def _sweep(metric: FinslerMetric, source: np.ndarray, targets: np.ndarray, grid_n: int) -> _SourceGrid:
    """
    Build a grid anchored at ``source`` and run one directed Dijkstra sweep.

    The spacing is 2 * span / grid_n with span the largest axis extent from the
    source to any target, so axis-aligned targets fall on nodes.
    """
    n = metric.dimension
    extent = np.max(np.abs(targets - source), axis=0)
    span = float(np.max(extent)) if np.max(extent) > 0.0 else 1.0
    h = 2.0 * span / grid_n
    margin = 0.5 * span
    lo = np.minimum(source, targets.min(axis=0)) - margin
    hi = np.maximum(source, targets.max(axis=0)) + margin
    index_lo = np.floor((lo - source) / h + 1e-9).astype(int)
    index_hi = np.ceil((hi - source) / h - 1e-9).astype(int)
    shape = tuple(int(v) for v in index_hi - index_lo + 1)

    mesh = np.stack(np.meshgrid(*[np.arange(s) for s in shape], indexing="ij"), axis=-1)
    points = source + (mesh + index_lo) * h
    active = np.asarray(metric.contains(points))
    flat_ids = np.arange(int(np.prod(shape))).reshape(shape)

    rows, cols, weights = [], [], []
    for offset in stencil_offsets(n):
        src_slice, dst_slice = [], []
        for a in range(n):
            o = int(offset[a])
            src_slice.append(slice(max(0, -o), shape[a] - max(0, o)))
            dst_slice.append(slice(max(0, o), shape[a] - max(0, -o)))
        src_slice, dst_slice = tuple(src_slice), tuple(dst_slice)
        both = active[src_slice] & active[dst_slice]
        if not np.any(both):
            continue
        start_pts = points[src_slice][both]
        step = offset * h
        w = metric._F(start_pts + 0.5 * step, np.broadcast_to(step, start_pts.shape))
        rows.append(flat_ids[src_slice][both])
        cols.append(flat_ids[dst_slice][both])
        weights.append(w)

    size = int(np.prod(shape))
    graph = coo_matrix(
        (np.concatenate(weights), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size)
    ).tocsr()
    source_id = int(flat_ids[tuple(-index_lo)])
    dist, predecessors = dijkstra(graph, directed=True, indices=source_id, return_predecessors=True)
    logger.debug("dijkstra sweep over %d nodes (h=%.4g) for %s", size, h, metric.describe())
    return _SourceGrid(source, h, index_lo, shape, active, dist.reshape(shape), predecessors.reshape(shape))


def _attach(metric: FinslerMetric, grid: _SourceGrid, targets: np.ndarray) -> tuple:
    """
    Distance to arbitrary targets: best node in the surrounding 5^n block plus
    the straight final step.

    Returns:
        tuple: (distances, flat index of the chosen node per target)
    """
    n = metric.dimension
    block = np.array(list(itertools.product(range(-2, 3), repeat=n)))
    base = np.rint((targets - grid.origin) / grid.h).astype(int) - grid.index_lo
    candidates = base[:, None, :] + block[None, :, :]
    inside = np.all((candidates >= 0) & (candidates < np.asarray(grid.shape)), axis=-1)
    clipped = np.clip(candidates, 0, np.asarray(grid.shape) - 1)
    index = tuple(clipped[..., a] for a in range(n))
    node_dist = np.where(inside & grid.active[index], grid.dist[index], np.inf)
    node_pts = grid.coords(clipped)
    step = targets[:, None, :] - node_pts
    finite = np.isfinite(node_dist)
    w = np.zeros(node_dist.shape)
    if np.any(finite):
        w[finite] = metric._F(node_pts[finite] + 0.5 * step[finite], step[finite])
    total = node_dist + w
    best = np.argmin(total, axis=1)
    chosen = clipped[np.arange(targets.shape[0]), best]
    flat = np.ravel_multi_index(tuple(chosen[:, a] for a in range(n)), grid.shape)
    return total[np.arange(targets.shape[0]), best], flat


def _grid_distances(metric: FinslerMetric, source: np.ndarray, targets: np.ndarray, grid_n: int) -> np.ndarray:
    grid = _sweep(metric, source, targets, grid_n)
    values, _ = _attach(metric, grid, targets)
    if not np.all(np.isfinite(values)):
        bad = targets[~np.isfinite(values)][0]
        raise UnreachableError(
            f"target {bad.tolist()} is unreachable from {source.tolist()}: "
            f"grid truncated by the {metric.kind} chart"
        )
    return values


def _dijkstra_path(metric: FinslerMetric, source: np.ndarray, target: np.ndarray, grid_n: int) -> np.ndarray:
    grid = _sweep(metric, source, target[None, :], grid_n)
    values, flat = _attach(metric, grid, target[None, :])
    if not np.isfinite(values[0]):
        raise UnreachableError(f"target {target.tolist()} is unreachable: grid truncated by the {metric.kind} chart")
    predecessors = grid.predecessors.reshape(-1)
    path = []
    node = int(flat[0])
    while node >= 0:
        path.append(grid.coords(np.array(np.unravel_index(node, grid.shape))))
        node = int(predecessors[node])
    path = path[::-1]
    path[0] = source
    path.append(target)
    return np.asarray(path)


def _resample(path: np.ndarray, count: int) -> np.ndarray:
    arc = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(path, axis=0), axis=1))])
    if arc[-1] == 0.0:
        return np.repeat(path[:1], count, axis=0)
    keep = np.concatenate([[True], np.diff(arc) > 0.0])
    arc, path = arc[keep], path[keep]
    s = np.linspace(0.0, arc[-1], count)
    return np.stack([np.interp(s, arc, path[:, a]) for a in range(path.shape[1])], axis=-1)


def _descend(metric: FinslerMetric, source: np.ndarray, target: np.ndarray, provider: DistanceProvider) -> float:
    seed = _resample(_dijkstra_path(metric, source, target, provider.grid_n), provider.descent_vertices)
    n = metric.dimension
    seed_length = _polyline_length(metric, seed)

    def length(flat):
        vertices = np.vstack([source, flat.reshape(-1, n), target])
        if not np.all(metric.contains(vertices)):
            return seed_length * 10.0 + 1.0
        mids = 0.5 * (vertices[1:] + vertices[:-1])
        return float(np.sum(metric._F(mids, np.diff(vertices, axis=0))))

    result = minimize(length, seed[1:-1].reshape(-1), method="L-BFGS-B", options={"maxiter": provider.descent_iters})
    refined = min(float(result.fun), seed_length)
    logger.debug("curve descent %.10g -> %.10g in %d iterations", seed_length, refined, result.nit)
    return refined


# ---------------------------------------------------------------------------
# Distance operations
# ---------------------------------------------------------------------------

def distance(metric: FinslerMetric, x1: PointLike, x2: PointLike, provider: DistanceProvider = None) -> float:
    """
    Forward Finslerian distance d(x1, x2) (not symmetric in general).

    Args:
        metric: Finsler metric
        x1: Start point
        x2: End point
        provider: Distance provider (default: closed form when available)

    Returns:
        float: d(x1, x2) >= 0

    Raises:
        MetricDomainError: If a point lies outside the metric chart
        UnreachableError: If a grid truncation cuts the target off
        ValueError: If the closed-form tier is requested for a metric without one
    """
    provider = provider or DistanceProvider.auto(metric)
    a, b = _coords(x1), _coords(x2)
    metric.check_domain(a)
    metric.check_domain(b)
    if np.array_equal(a, b):
        return 0.0
    if provider.tier == "closed_form":
        if not metric.has_closed_form_distance:
            raise ValueError(f"{metric.describe()} has no closed-form distance; use grid_dijkstra")
        return float(metric.closed_form_distance(a, b))
    if provider.tier == "grid_dijkstra":
        return float(_grid_distances(metric, a, b[None, :], provider.grid_n)[0])
    return _descend(metric, a, b, provider)


def distance_field(metric: FinslerMetric, x0: PointLike, points: np.ndarray, provider: DistanceProvider = None) -> np.ndarray:
    """
    Forward distances d(x0, p) for many points p, shape points.shape[:-1].

    Closed forms are vectorised; the numeric tiers share one Dijkstra sweep.
    """
    provider = provider or DistanceProvider.auto(metric)
    source = _coords(x0)
    points = np.asarray(points, dtype=float)
    flat = points.reshape(-1, points.shape[-1])
    if provider.tier == "closed_form":
        if not metric.has_closed_form_distance:
            raise ValueError(f"{metric.describe()} has no closed-form distance; use grid_dijkstra")
        return np.asarray(metric.closed_form_distance(source, flat)).reshape(points.shape[:-1])
    metric.check_domain(source)
    values = _grid_distances(metric, source, flat, provider.grid_n)
    values[np.all(flat == source, axis=-1)] = 0.0
    return values.reshape(points.shape[:-1])


def forward_ball_indicator(
    metric: FinslerMetric,
    center: PointLike,
    radius: float,
    x: PointLike,
    provider: DistanceProvider = None,
) -> bool:
    """True iff d(center, x) < radius (forward distance; argument order matters)."""
    if radius < 0.0:
        raise ValueError("ball radius must be nonnegative")
    return distance(metric, center, x, provider) < radius
