"""
Approximation machinery: distance cutoffs, mollification, boundary
translation and partitions of unity, together with the convergence
experiments built on them.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np
from scipy import ndimage
from scipy.integrate import quad

from ..models.domain import Domain, FiberQuadrature, sphere_area
from ..models.field import GridField, ScalarField
from ..models.geometry import Point
from ..schemas.table import ConvergenceTable
from ..utils.errors import CoverError, MollifierResolutionError
from ..utils.numerics import central_gradient
from . import sobolev
from .metric_zoo import FinslerMetric
from .spray_geodesics import DistanceProvider, distance_field


logger = logging.getLogger(__name__)

Box = Tuple[Sequence[float], Sequence[float]]

# spacing must stay below eps / MIN_STENCIL_CELLS
MIN_STENCIL_CELLS = 4
EXPERIMENT_STENCIL_CELLS = 5
KINK_TOLERANCE = 1e-6


# ---------------------------------------------------------------------------
# Truncation
# ---------------------------------------------------------------------------

def truncation_profile(t):
    """f(t) = 1 for t <= 0, 1 - t on (0, 1), 0 for t >= 1."""
    value = np.clip(1.0 - np.asarray(t, dtype=float), 0.0, 1.0)
    return float(value) if np.ndim(value) == 0 else value


def truncation_profile_derivative(t):
    """f'(t) = -1 on (0, 1) and 0 elsewhere (kinks taken as 0)."""
    t = np.asarray(t, dtype=float)
    value = np.where((t > 0.0) & (t < 1.0), -1.0, 0.0)
    return float(value) if np.ndim(value) == 0 else value


def _center(x0, n: int) -> np.ndarray:
    if x0 is None:
        return np.zeros(n)
    return x0.coords if isinstance(x0, Point) else np.asarray(x0, dtype=float)


def truncate(phi: ScalarField, metric: FinslerMetric, x0, j: int, provider: DistanceProvider = None) -> ScalarField:
    """
    phi_j(x) = phi(x) f(d(x0, x) - j).

    phi_j equals phi on the forward ball B+(x0, j) and vanishes outside
    B+(x0, j + 1). The gradient is phi' f + phi f' grad d, with grad d from
    central differences of the forward distance.
    """
    if j < 1:
        raise ValueError("truncation index j must be at least 1")
    provider = provider or DistanceProvider.auto(metric)
    center = _center(x0, metric.dimension)

    def dist(x):
        return distance_field(metric, center, x, provider)

    def value(x):
        return phi(x) * truncation_profile(dist(x) - j)

    def gradient(x):
        t = dist(x) - j
        grad_d = central_gradient(dist, x)
        return (
            phi.grad(x) * truncation_profile(t)[..., None]
            + (phi(x) * truncation_profile_derivative(t))[..., None] * grad_d
        )

    return ScalarField(value, gradient, smoothness="piecewise", name=f"{phi.name}_{j}")


def leibniz_bound_defect(
    phi: ScalarField,
    metric: FinslerMetric,
    x0,
    j: int,
    points: np.ndarray,
    provider: DistanceProvider = None,
) -> float:
    """
    max of |grad phi_j| - (|grad phi| + |phi| sup|f'| |grad d|) over the points.

    Points within KINK_TOLERANCE of the two metric spheres are skipped. A value
    <= 0 means the Leibniz bound holds on the sample.
    """
    provider = provider or DistanceProvider.auto(metric)
    center = _center(x0, metric.dimension)
    points = np.asarray(points, dtype=float)

    def dist(x):
        return distance_field(metric, center, x, provider)

    t = dist(points) - j
    keep = (np.abs(t) > KINK_TOLERANCE) & (np.abs(t - 1.0) > KINK_TOLERANCE)
    points = points[keep]
    if points.shape[0] == 0:
        raise ValueError("no differentiable sample points left")
    phi_j = truncate(phi, metric, center, j, provider)
    lhs = np.linalg.norm(phi_j.grad(points), axis=-1)
    rhs = np.linalg.norm(phi.grad(points), axis=-1) + np.abs(phi(points)) * np.linalg.norm(
        central_gradient(dist, points), axis=-1
    )
    return float(np.max(lhs - rhs))


# ---------------------------------------------------------------------------
# Mollifiers
# ---------------------------------------------------------------------------

def _bump(r2: np.ndarray) -> np.ndarray:
    out = np.zeros(np.shape(r2))
    inside = r2 < 1.0
    out[inside] = np.exp(1.0 / (r2[inside] - 1.0))
    return out


@dataclass(frozen=True)
class MollifierSpec:
    """
    Scaled standard mollifier J_eps(x) = eps^{-n} C_n J(x / eps).

    Attributes:
        eps: Support radius
        dimension: n
        normalization: C_n, making the integral of J equal to 1
    """
    eps: float
    dimension: int
    normalization: float = field(init=False)

    def __post_init__(self):
        if not self.eps > 0.0:
            raise ValueError("mollifier radius must be positive")
        if self.dimension not in (1, 2, 3):
            raise ValueError(f"mollifier dimension must be 1, 2 or 3, got {self.dimension}")
        n = self.dimension
        radial, _ = quad(lambda r: r ** (n - 1) * math.exp(1.0 / (r * r - 1.0)), 0.0, 1.0, epsabs=1e-14, epsrel=1e-13)
        object.__setattr__(self, "normalization", 1.0 / (sphere_area(n) * radial))


def mollifier_kernel(spec: MollifierSpec, x) -> np.ndarray:
    """J_eps(x); zero for |x| >= eps. Broadcasts over leading axes."""
    x = x.coords if isinstance(x, Point) else np.asarray(x, dtype=float)
    r2 = np.sum((x / spec.eps) ** 2, axis=-1)
    value = spec.normalization * _bump(np.asarray(r2)) / spec.eps**spec.dimension
    return float(value) if np.ndim(value) == 0 else value


def kernel_stencil(spec: MollifierSpec, spacing: np.ndarray) -> np.ndarray:
    """Kernel sampled on the grid offsets inside |x| < eps, rescaled to unit mass."""
    half = [int(math.ceil(spec.eps / h)) for h in spacing]
    axes = [np.arange(-k, k + 1) * h for k, h in zip(half, spacing)]
    offsets = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    stencil = mollifier_kernel(spec, offsets) * float(np.prod(spacing))
    mass = float(np.sum(stencil))
    if not mass > 0.0:
        raise MollifierResolutionError(f"mollifier eps={spec.eps} has an empty stencil on spacing {spacing.tolist()}")
    return stencil / mass


def mollify(u: ScalarField, spec: MollifierSpec, domain: Domain) -> GridField:
    """
    Discrete convolution J_eps * u on the domain grid.

    Box domains extend u by zero outside the box; torus domains wrap.
    The returned gradient is J_eps * grad u.

    Raises:
        MollifierResolutionError: If the grid spacing is not below eps / 4
    """
    spacing = domain.spacing
    if np.max(spacing) >= spec.eps / MIN_STENCIL_CELLS:
        logger.warning("refusing mollification: eps=%.4g on spacing %.4g", spec.eps, float(np.max(spacing)))
        raise MollifierResolutionError(
            f"mollifier eps={spec.eps:g} needs grid spacing below {spec.eps / MIN_STENCIL_CELLS:g}, "
            f"got {float(np.max(spacing)):g}"
        )
    if spec.dimension != domain.dimension:
        raise ValueError("mollifier and domain dimensions differ")
    stencil = kernel_stencil(spec, spacing)
    mode = "wrap" if domain.periodic else "constant"
    points = domain.grid_points()
    inside = domain.mask()
    values = np.where(inside, u(points), 0.0)
    grads = np.where(inside[..., None], u.grad(points), 0.0)
    smoothed = ndimage.convolve(values, stencil, mode=mode, cval=0.0)
    smoothed_grad = np.stack(
        [ndimage.convolve(grads[..., a], stencil, mode=mode, cval=0.0) for a in range(domain.dimension)],
        axis=-1,
    )
    return GridField(domain, smoothed, smoothed_grad, name=f"J{spec.eps:g}*{u.name}")


def grid_errors(v: GridField, u: ScalarField, domain: Domain, p: float, margin: float) -> tuple:
    """(L^p error, H_1^p error, Young ratio) of v against u, errors on the margin-interior."""
    points = domain.grid_points()
    inside = domain.mask()
    w = domain.cell_volume
    lo, hi = np.asarray(domain.lo), np.asarray(domain.hi)
    interior = inside.copy()
    if not domain.periodic and margin > 0.0:
        interior &= np.all((points >= lo + margin) & (points <= hi - margin), axis=-1)
    exact = u(points)
    diff = np.abs(v.values - exact)[interior]
    grad_diff = np.linalg.norm(v.gradient_values - u.grad(points), axis=-1)[interior]
    lp_err = float(np.sum(w * diff**p) ** (1.0 / p))
    grad_err = float(np.sum(w * grad_diff**p) ** (1.0 / p))
    base = float(np.sum(w * np.abs(exact[inside]) ** p) ** (1.0 / p))
    smoothed = float(np.sum(w * np.abs(v.values[inside]) ** p) ** (1.0 / p))
    ratio = smoothed / base if base > 0.0 else 0.0
    return lp_err, lp_err + grad_err, ratio


def mollification_convergence(
    u: ScalarField,
    p: float,
    eps_list: Sequence[float],
    domain: Domain,
    margin: float = None,
) -> ConvergenceTable:
    """
    Rows (eps, ||J_eps*u - u||_p, ||J_eps*u - u||_{H_1^p}, ||J_eps*u||_p / ||u||_p).

    Each eps gets a grid with spacing at most eps / 5; errors are measured on
    the interior at distance ``margin`` (default max eps) from the boundary.
    """
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps list must be strictly decreasing")
    p = float(p)
    margin = max(eps_list) if margin is None else float(margin)
    rows = []
    for eps in eps_list:
        grid = domain.with_spacing_at_most(eps / EXPERIMENT_STENCIL_CELLS)
        v = mollify(u, MollifierSpec(eps, domain.dimension), grid)
        lp_err, h1p_err, ratio = grid_errors(v, u, grid, p, margin)
        logger.info("mollify eps=%g on %s: lp_err=%.3e", eps, grid.describe(), lp_err)
        rows.append([eps, lp_err, h1p_err, ratio])
    return ConvergenceTable(
        columns=["eps", "lp_err", "h1p_err", "young_ratio"],
        rows=rows,
        metadata={"field": u.name, "p": repr(p), "domain": domain.describe(), "margin": repr(margin)},
    )


# ---------------------------------------------------------------------------
# Density of compactly supported fields
# ---------------------------------------------------------------------------

def density_experiment(
    metric: FinslerMetric,
    phi: ScalarField,
    p: float,
    j_max: int,
    provider: DistanceProvider = None,
    rule: FiberQuadrature = None,
    domain: Domain = None,
    x0=None,
) -> ConvergenceTable:
    """
    Rows (j, ||phi_j - phi||_{L^p(SM)}, ||grad(phi_j - phi)||_{L^p(SM)}, ||phi_j - phi||_{H_1^p}).

    The base domain is the chart truncation of M (default the box [-6, 6]^n),
    recorded in the metadata together with the distance provider.
    """
    if j_max < 1:
        raise ValueError("j_max must be at least 1")
    provider = provider or DistanceProvider.auto(metric)
    rule = rule or FiberQuadrature.standard(metric.dimension)
    n = metric.dimension
    domain = domain or Domain.box([-6.0] * n, [6.0] * n)
    center = _center(x0, n)
    logger.info("density experiment on %s with provider %s", metric.describe(), provider.describe())
    rows = []
    for j in range(1, j_max + 1):
        diff = truncate(phi, metric, center, j, provider) - phi
        lp = sobolev.lp_norm_SM(metric, diff, p, domain, rule)
        grad = sobolev.gradient_lp_norm_SM(metric, diff, p, domain, rule)
        rows.append([float(j), lp, grad, lp + grad])
    return ConvergenceTable(
        columns=["j", "lp_sm", "grad_lp_sm", "h1p"],
        rows=rows,
        metadata={
            "metric": metric.describe(),
            "field": phi.name,
            "p": repr(float(p)),
            "provider": provider.describe(),
            "center": repr(center.tolist()),
            "truncation": domain.describe(),
        },
    )


# ---------------------------------------------------------------------------
# Boundary translation
# ---------------------------------------------------------------------------

def boundary_translate(u: ScalarField, m: int) -> ScalarField:
    """h_m(x) = u(x^1 - 1/m, x^2, ...), u translated inward by 1/m."""
    if m < 1:
        raise ValueError("translation index m must be at least 1")

    def shifted(x):
        shift = np.zeros(np.shape(x)[-1])
        shift[0] = 1.0 / m
        return shift

    return ScalarField(
        value=lambda x: u(np.asarray(x, float) - shifted(x)),
        gradient=lambda x: u.grad(np.asarray(x, float) - shifted(x)),
        smoothness=u.smoothness,
        name=f"{u.name}(x1-1/{m})",
    )


def boundary_translation_experiment(u: ScalarField, m_list: Sequence[int], p: float, domain: Domain = None) -> ConvergenceTable:
    """Rows (m, ||h_m - u||_{L^p(D)}, ||h_m - u||_{H_1^p(D)}) over the half-ball D."""
    m_list = [int(m) for m in m_list]
    domain = domain or Domain.half_ball(1.0, 2)
    rows = []
    for m in m_list:
        diff = boundary_translate(u, m) - u
        lp = sobolev.classical_sobolev_norm(diff, (0, p), domain)
        rows.append([float(m), lp, sobolev.classical_sobolev_norm(diff, (1, p), domain)])
    return ConvergenceTable(
        columns=["m", "lp_err", "h1p_err"],
        rows=rows,
        metadata={"field": u.name, "p": repr(float(p)), "domain": domain.describe()},
    )


# ---------------------------------------------------------------------------
# Partition of unity
# ---------------------------------------------------------------------------

def _log_profile(t: np.ndarray) -> tuple:
    """log b(t) = -1 / (t (1 - t)) on (0, 1), -inf outside, and its derivative."""
    log_value = np.full(np.shape(t), -np.inf)
    slope = np.zeros(np.shape(t))
    inside = (t > 0.0) & (t < 1.0)
    s = t[inside] * (1.0 - t[inside])
    log_value[inside] = -1.0 / s
    slope[inside] = (1.0 - 2.0 * t[inside]) / s**2
    return log_value, slope


def _box_log_bump(lo: np.ndarray, hi: np.ndarray):
    width = hi - lo

    def evaluate(x):
        t = (np.asarray(x, float) - lo) / width
        logs, slopes = _log_profile(t)
        return np.sum(logs, axis=-1), slopes / width

    return evaluate


def partition_of_unity(cover: Sequence[Box], region: Box = None, samples: int = 64) -> List[ScalarField]:
    """
    Smooth partition of unity subordinate to a cover by open boxes.

    Each alpha_i is a normalised product bump supported in box i. Bumps are
    combined in log space, so points a hair inside a box edge still count as
    covered. When ``region`` is given, a closed sample grid of it is checked
    for coverage.

    Raises:
        CoverError: If a sample point of ``region`` lies in no box
    """
    boxes = [(np.asarray(lo, float), np.asarray(hi, float)) for lo, hi in cover]
    if not boxes:
        raise CoverError("empty cover")
    for lo, hi in boxes:
        if lo.shape != hi.shape or np.any(lo >= hi):
            raise ValueError(f"invalid cover box {lo.tolist()}..{hi.tolist()}")
    bumps = [_box_log_bump(lo, hi) for lo, hi in boxes]

    def weights(x):
        """Normalised weights (boxes first), their log-gradients and the coverage mask."""
        parts = [bump(x) for bump in bumps]
        logs = np.stack([log for log, _ in parts])
        covered = np.isfinite(logs).any(axis=0)
        top = np.where(covered, logs.max(axis=0), 0.0)
        raw = np.exp(logs - top)
        total = raw.sum(axis=0)
        alpha = raw / np.where(covered, total, 1.0)
        grads = np.stack([np.where(np.isfinite(log)[..., None], g, 0.0) for log, g in parts])
        return alpha, grads, covered

    if region is not None:
        lo, hi = (np.asarray(b, float) for b in region)
        axes = [np.linspace(a, b, samples) for a, b in zip(lo, hi)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, lo.shape[0])
        _, _, covered = weights(grid)
        if not covered.all():
            point = grid[np.argmin(covered)]
            raise CoverError(f"point {point.tolist()} is not covered by any box")

    def member(i):
        def value(x):
            alpha, _, _ = weights(x)
            return alpha[i]

        def gradient(x):
            # grad alpha_i = alpha_i (grad log b_i - sum_j alpha_j grad log b_j)
            alpha, grads, _ = weights(x)
            mean = np.sum(alpha[..., None] * grads, axis=0)
            return alpha[i][..., None] * (grads[i] - mean)

        return ScalarField(value, gradient, name=f"alpha{i}")

    return [member(i) for i in range(len(boxes))]


def chartwise_approximation(
    u: ScalarField,
    cover: Sequence[Box],
    eps_list: Sequence[float],
    domain: Domain,
    p: float = 2.0,
) -> ConvergenceTable:
    """
    Rows (eps, ||v - u||_p, ||v - u||_{H_1^p}) with v = sum_i J_eps * (alpha_i u).

    Charts are the cover boxes themselves, so no chart map is composed.
    """
    eps_list = [float(e) for e in eps_list]
    region = (domain.lo, domain.hi)
    alphas = partition_of_unity(cover, region)
    pieces = [alpha.times(u) for alpha in alphas]
    margin = max(eps_list)
    rows = []
    for eps in eps_list:
        grid = domain.with_spacing_at_most(eps / EXPERIMENT_STENCIL_CELLS)
        spec = MollifierSpec(eps, domain.dimension)
        parts = [mollify(piece, spec, grid) for piece in pieces]
        total = GridField(
            grid,
            sum(part.values for part in parts),
            sum(part.gradient_values for part in parts),
            name=f"chartwise{eps:g}",
        )
        lp_err, h1p_err, _ = grid_errors(total, u, grid, p, margin if not grid.periodic else 0.0)
        rows.append([eps, lp_err, h1p_err])
    return ConvergenceTable(
        columns=["eps", "lp_err", "h1p_err"],
        rows=rows,
        metadata={"field": u.name, "charts": repr(len(alphas)), "domain": domain.describe()},
    )
