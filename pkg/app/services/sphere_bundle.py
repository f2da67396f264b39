"""
Sphere bundle integration.

Integrals over SM are evaluated in chart form: for each base node x the
fiber S^{n-1} is swept by the unit directions theta of a ``FiberQuadrature``
and weighted by det g(x, theta) / F(x, theta)^n; the base is integrated with
the domain's midpoint weights. dV_F on M uses the fiber mass divided by
c_{n-1}.
"""

import logging
from typing import Callable, Optional

import numpy as np

from ..config import settings
from ..models.domain import Domain, FiberQuadrature, sphere_area
from ..models.geometry import Point, TangentVector
from ..utils.errors import IntegrationError
from ..utils.numerics import chunked_map
from .metric_zoo import FinslerMetric


logger = logging.getLogger(__name__)

FiberIntegrand = Callable[[np.ndarray, np.ndarray], np.ndarray]

PROJECTION_STEP = 1e-5

# absolute slack of the lemma chain, relative once |rhs| > 1
CHAIN_TOLERANCE = 1e-8


def _rule(metric: FinslerMetric, rule: Optional[FiberQuadrature]) -> FiberQuadrature:
    rule = rule or FiberQuadrature.standard(metric.dimension)
    if rule.dimension != metric.dimension:
        raise ValueError(f"fiber rule is {rule.dimension}-dimensional, metric is {metric.dimension}-dimensional")
    return rule


def _coords(x) -> np.ndarray:
    return x.coords if isinstance(x, Point) else np.asarray(x, dtype=float)


def _unit(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    norm = np.linalg.norm(theta, axis=-1)
    if np.any(np.abs(norm - 1.0) > 1e-9):
        raise ValueError("fiber direction theta must be a unit vector")
    return theta


def fiber_tensors(metric: FinslerMetric, x: np.ndarray, rule: FiberQuadrature) -> tuple:
    """
    Fundamental tensors and fiber weights at every (x, theta_k).

    Args:
        metric: Finsler metric
        x: Base points, shape (M, n)
        rule: Fiber rule with K nodes

    Returns:
        tuple: g of shape (M, K, n, n) and w_k det g / F^n of shape (M, K)
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    theta = rule.nodes
    n = metric.dimension

    def block(points):
        F = metric.F(points[:, None, :], theta[None, :, :])
        g = metric.fundamental_tensor(points[:, None, :], theta[None, :, :])
        weights = rule.weights[None, :] * np.linalg.det(g) / F**n
        return np.concatenate([g.reshape(points.shape[0], rule.size, n * n), weights[..., None]], axis=-1)

    if metric.x_independent:
        packed = np.broadcast_to(block(x[:1]), (x.shape[0], rule.size, n * n + 1))
    else:
        packed = chunked_map(block, x, chunk=max(1, 4096 // rule.size))
    g = packed[..., : n * n].reshape(x.shape[0], rule.size, n, n)
    return g, np.ascontiguousarray(packed[..., -1])


def fiber_weights(metric: FinslerMetric, x: np.ndarray, rule: FiberQuadrature) -> np.ndarray:
    """w_k det g(x, theta_k) / F(x, theta_k)^n, shape (M, K)."""
    return fiber_tensors(metric, x, rule)[1]


# ---------------------------------------------------------------------------
# Fiber operations
# ---------------------------------------------------------------------------

def indicatrix_point(metric: FinslerMetric, x, theta) -> TangentVector:
    """The point y = theta / F(x, theta) of the indicatrix S_xM over theta."""
    x = _coords(x)
    theta = _unit(theta)
    return TangentVector(Point(x), theta / metric.F(x, theta))


def fiber_quadrature(
    metric: FinslerMetric,
    x,
    integrand: FiberIntegrand,
    rule: FiberQuadrature = None,
) -> float:
    """
    Integral over S^{n-1} of integrand(x, theta) det g / F^n d sigma.

    Args:
        metric: Finsler metric
        x: Base point
        integrand: Callable of (x, theta) arrays broadcasting to (K,)
        rule: Fiber rule (default: standard rule with settings.FIBER_NODES)
    """
    rule = _rule(metric, rule)
    x = _coords(x)
    values = np.broadcast_to(np.asarray(integrand(x[None, :], rule.nodes), dtype=float), (rule.size,))
    if not np.all(np.isfinite(values)):
        raise IntegrationError(f"fiber integrand is not finite at x={x.tolist()}", [x.tolist()])
    return float(np.sum(values * fiber_weights(metric, x, rule)[0]))


def fiber_mass(metric: FinslerMetric, x, rule: FiberQuadrature = None) -> np.ndarray:
    """Integral over S^{n-1} of det g / F^n; a float for one point, an array for (M, n)."""
    rule = _rule(metric, rule)
    x = np.asarray(_coords(x), dtype=float)
    mass = np.sum(fiber_weights(metric, x, rule), axis=-1)
    return float(mass[0]) if x.ndim == 1 else mass


def volume_density(metric: FinslerMetric, x, rule: FiberQuadrature = None):
    """sigma_F(x) = fiber mass / c_{n-1}."""
    return fiber_mass(metric, x, rule) / sphere_area(metric.dimension)


# ---------------------------------------------------------------------------
# Base integration
# ---------------------------------------------------------------------------

def _check_finite(values: np.ndarray, nodes: np.ndarray, what: str) -> None:
    bad = ~np.isfinite(values)
    if bad.ndim > 1:
        bad = np.any(bad, axis=tuple(range(1, bad.ndim)))
    if np.any(bad):
        offending = nodes[bad][:10].tolist()
        raise IntegrationError(
            f"{what} is not finite at {int(np.count_nonzero(bad))} nodes, first {offending}",
            offending,
        )


def integrate_M(metric: FinslerMetric, domain: Domain, f: Callable, rule: FiberQuadrature = None) -> float:
    """
    Integral over the domain of f dV_F.

    Args:
        metric: Finsler metric
        domain: Base domain
        f: Field or callable on points (M, n)
        rule: Fiber rule used for sigma_F

    Raises:
        IntegrationError: If f is not finite at some node
    """
    rule = _rule(metric, rule)
    nodes = domain.nodes()
    values = np.broadcast_to(np.asarray(f(nodes), dtype=float), nodes.shape[:1])
    _check_finite(values, nodes, "integrand")
    density = volume_density(metric, nodes, rule)
    return float(np.sum(domain.weights() * values * density))


def integrate_SM(
    metric: FinslerMetric,
    domain: Domain,
    integrand: FiberIntegrand,
    rule: FiberQuadrature = None,
) -> float:
    """
    Integral over the sphere bundle of the domain of integrand(x, theta) dV_SM.

    ``integrand`` receives x of shape (M, 1, n) and theta of shape (1, K, n).
    """
    rule = _rule(metric, rule)
    nodes = domain.nodes()
    values = np.broadcast_to(
        np.asarray(integrand(nodes[:, None, :], rule.nodes[None, :, :]), dtype=float),
        (nodes.shape[0], rule.size),
    )
    _check_finite(values, nodes, "sphere-bundle integrand")
    weights = fiber_weights(metric, nodes, rule)
    return float(np.sum(domain.weights() * np.sum(values * weights, axis=1)))


def pullback(f: Callable) -> FiberIntegrand:
    """Lift a base function to a fiber integrand that ignores theta."""
    def lifted(x, theta):
        return f(x[..., 0, :])[..., None]

    return lifted


# ---------------------------------------------------------------------------
# Radial projection and the admissible constant R
# ---------------------------------------------------------------------------

def tangent_frame(theta: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the tangent plane of S^{n-1} at theta, shape (n-1, n)."""
    n = theta.shape[0]
    q, _ = np.linalg.qr(np.column_stack([theta, np.eye(n)]))
    return q[:, 1:n].T


def radial_projection_jacobian(metric: FinslerMetric, x, theta) -> float:
    """
    det J of the radial projection S_xM -> S^{n-1} at the indicatrix point over theta.

    Both spheres are parameterised through theta; the indicatrix area element
    comes from central differences of y(theta) = theta / F(x, theta) along an
    orthonormal frame of the unit sphere, whose own area element is 1.
    """
    x = _coords(x)
    theta = _unit(theta)
    if metric.dimension == 1:
        return 1.0
    h = PROJECTION_STEP
    columns = []
    for e in tangent_frame(theta):
        ahead = (theta + h * e) / np.linalg.norm(theta + h * e)
        behind = (theta - h * e) / np.linalg.norm(theta - h * e)
        y_ahead = ahead / metric.F(x, ahead)
        y_behind = behind / metric.F(x, behind)
        columns.append((y_ahead - y_behind) / (2.0 * h))
    tangent = np.column_stack(columns)
    gram = tangent.T @ tangent
    return float(1.0 / np.sqrt(np.linalg.det(gram)))


def _sample_points(domain: Domain, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    lo, hi = np.asarray(domain.lo), np.asarray(domain.hi)
    corners = np.array(np.meshgrid(*zip(lo, hi), indexing="ij")).reshape(domain.dimension, -1).T
    uniform = rng.uniform(lo, hi, size=(count * 4, domain.dimension))
    if domain.kind in ("ball", "half_ball"):
        inside = np.linalg.norm(uniform, axis=-1) < domain.radius
        if domain.kind == "half_ball":
            inside &= uniform[:, 0] < 0.0
        return uniform[inside][:count]
    return np.vstack([corners, uniform[:count]])


def stry_constant(
    metric: FinslerMetric,
    domain: Domain,
    sample_count: int = 100,
    rule: FiberQuadrature = None,
    seed: int = None,
) -> float:
    """
    Estimate R = c_{n-1} inf det J(A) sqrt(det g) over sampled (x, theta).

    Base points are the domain corners plus ``sample_count`` seeded uniform
    samples; fibers are scanned at the rule's nodes.
    """
    if sample_count < 100:
        raise ValueError("stry constant needs at least 100 samples")
    rule = _rule(metric, rule)
    seed = settings.SEED if seed is None else seed
    points = _sample_points(domain, sample_count, seed)
    points = points[np.asarray(metric.contains(points))]
    det = np.linalg.det(metric.fundamental_tensor(points[:, None, :], rule.nodes[None, :, :]))
    jac = np.array([
        [radial_projection_jacobian(metric, x, theta) for theta in rule.nodes]
        for x in points
    ])
    product = jac * np.sqrt(det)
    R = sphere_area(metric.dimension) * float(np.min(product))
    logger.info("stry constant of %s on %s: %.6g", metric.describe(), domain.describe(), R)
    return max(R, 0.0)


def lemma_chain(
    metric: FinslerMetric,
    u: Callable,
    p: float,
    domain: Domain,
    rule: FiberQuadrature = None,
    sample_count: int = 100,
    R: float = None,
) -> dict:
    """
    Both sides of int_SM |u|^p >= R int_M |u|^p.

    R is estimated with ``stry_constant`` unless given. The chain can only
    hold when R <= c_{n-1}, since int_SM of a pullback is exactly c_{n-1}
    times its int_M.

    Returns:
        dict: sm_integral, m_integral, R, rhs (= R * m_integral), holds
    """
    rule = _rule(metric, rule)
    power = lambda x: np.abs(u(x)) ** p
    sm_integral = integrate_SM(metric, domain, pullback(power), rule)
    m_integral = integrate_M(metric, domain, power, rule)
    if R is None:
        R = stry_constant(metric, domain, sample_count, rule)
    rhs = R * m_integral
    return {
        "sm_integral": sm_integral,
        "m_integral": m_integral,
        "R": R,
        "rhs": rhs,
        "holds": bool(sm_integral >= rhs - CHAIN_TOLERANCE * max(1.0, abs(rhs))),
    }
