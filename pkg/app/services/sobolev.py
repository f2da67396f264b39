"""
L^p and H_1^p norms on the sphere bundle, the dual norm F* and the
Ge-Shen comparison norm.

For a pullback field u o pi the horizontal derivative is the ordinary chart
gradient, so |grad u|(x, y) = sqrt(g^{ij}(x, y) u_i u_j) and no connection
coefficients are needed for k = 1.
"""

import logging
import math
from typing import Callable, Union

import numpy as np

from ..models.domain import Domain, FiberQuadrature
from ..models.field import ScalarField
from ..models.geometry import TangentVector
from ..schemas.run_config import SobolevSpec
from ..utils.errors import IntegrationError, ReversibilityError, UnsupportedOrderError
from . import sphere_bundle
from .metric_zoo import FinslerMetric


logger = logging.getLogger(__name__)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
DUAL_SCAN = 64
DUAL_ITERATIONS = 80

SpecLike = Union[SobolevSpec, tuple]


def _order(spec: SpecLike) -> tuple:
    k, p = (spec.k, spec.p) if isinstance(spec, SobolevSpec) else spec
    if k not in (0, 1):
        raise UnsupportedOrderError(f"unsupported order k={k}: only k in {{0, 1}} is implemented")
    if p < 1.0:
        raise ValueError(f"p must be at least 1, got {p}")
    return int(k), float(p)


def _check_p(p: float) -> float:
    if p < 1.0:
        raise ValueError(f"p must be at least 1, got {p}")
    return float(p)


def _rule(metric: FinslerMetric, rule: FiberQuadrature) -> FiberQuadrature:
    return rule or FiberQuadrature.standard(metric.dimension)


# ---------------------------------------------------------------------------
# Pointwise quantities
# ---------------------------------------------------------------------------

def horizontal_gradient_norm(metric: FinslerMetric, u: ScalarField, v: TangentVector) -> float:
    """
    sqrt(g^{ij}(x, y) u_i u_j) at the tangent vector v = (x, y), y != 0.

    Raises:
        MetricValidityError: If g(x, y) is singular
    """
    x, y = v.base.coords, v.components
    if not np.any(y):
        raise ValueError("horizontal gradient norm needs y != 0")
    du = u.grad(x)
    g = metric.fundamental_tensor(x, y)
    return float(np.sqrt(du @ np.linalg.solve(g, du)))


def _gradient_power(g: np.ndarray, du: np.ndarray, p: float) -> np.ndarray:
    """(du g^{-1} du)^{p/2} for g (M, K, n, n) and du (M, n)."""
    dub = np.broadcast_to(du[:, None, :], g.shape[:-1])
    quad = np.einsum("...i,...i->...", dub, np.linalg.solve(g, dub[..., None])[..., 0])
    return np.maximum(quad, 0.0) ** (0.5 * p)


def dual_norm(metric: FinslerMetric, x: np.ndarray, covector: np.ndarray) -> np.ndarray:
    """
    F*(x, xi) = max of xi(y) over the indicatrix F(x, y) = 1.

    The maximiser over unit directions theta of xi . theta / F(x, theta) is
    located by a fiber scan and refined by golden-section search (n = 2) or
    alternating golden sections in a tangent frame (n = 3). Broadcasts over
    leading axes.
    """
    x, xi = np.broadcast_arrays(np.asarray(x, float), np.asarray(covector, float))
    shape = xi.shape[:-1]
    x = x.reshape(-1, xi.shape[-1])
    xi = xi.reshape(-1, xi.shape[-1])
    n = xi.shape[-1]
    zero = ~np.any(xi, axis=-1)

    def objective(theta):
        return np.sum(xi * theta, axis=-1) / metric.F(x, theta)

    if n == 1:
        plus = xi[:, 0] / metric.F(x, np.ones_like(xi))
        minus = -xi[:, 0] / metric.F(x, -np.ones_like(xi))
        result = np.maximum(plus, minus)
    elif n == 2:
        result = _dual_norm_planar(x, xi, objective)
    else:
        result = _dual_norm_spatial(x, xi, objective)
    result = np.where(zero, 0.0, result)
    return result.reshape(shape)


def _dual_norm_planar(x, xi, objective):
    def value(phi):
        return objective(np.stack([np.cos(phi), np.sin(phi)], axis=-1))

    grid = 2.0 * math.pi * np.arange(DUAL_SCAN) / DUAL_SCAN
    scan = np.stack([value(np.full(x.shape[0], a)) for a in grid], axis=-1)
    best = grid[np.argmax(scan, axis=-1)]
    lo = best - 2.0 * math.pi / DUAL_SCAN
    hi = best + 2.0 * math.pi / DUAL_SCAN
    lo, hi = _golden(value, lo, hi, DUAL_ITERATIONS)
    return np.maximum(value(0.5 * (lo + hi)), np.max(scan, axis=-1))


def _golden(value, lo, hi, iterations):
    """Vectorised golden-section search for the maximum of a unimodal ``value``."""
    for _ in range(iterations):
        a = hi - GOLDEN * (hi - lo)
        b = lo + GOLDEN * (hi - lo)
        left = value(a) > value(b)
        hi = np.where(left, b, hi)
        lo = np.where(left, lo, a)
    return lo, hi


def _dual_norm_spatial(x, xi, objective):
    rule = FiberQuadrature.standard(3, 32)
    scan = np.stack([objective(np.broadcast_to(theta, xi.shape)) for theta in rule.nodes], axis=-1)
    center = rule.nodes[np.argmax(scan, axis=-1)]
    best = np.max(scan, axis=-1)
    radius = 0.25
    for _ in range(4):
        for axis in range(2):
            frames = np.stack([sphere_bundle.tangent_frame(c) for c in center])
            direction = frames[:, axis, :]

            def along(t):
                theta = center + t[:, None] * direction
                return objective(theta / np.linalg.norm(theta, axis=-1, keepdims=True))

            lo, hi = _golden(along, np.full(x.shape[0], -radius), np.full(x.shape[0], radius), DUAL_ITERATIONS // 2)
            t = 0.5 * (lo + hi)
            theta = center + t[:, None] * direction
            center = theta / np.linalg.norm(theta, axis=-1, keepdims=True)
            best = np.maximum(best, objective(center))
        radius *= 0.25
    return best


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------

def _samples(u: Callable, nodes: np.ndarray) -> np.ndarray:
    values = np.asarray(u(nodes), dtype=float)
    if not np.all(np.isfinite(values)):
        bad = nodes[~np.isfinite(values)][:10].tolist()
        raise IntegrationError(f"field is not finite at {bad}", bad)
    return values


def lp_norm_SM(metric: FinslerMetric, u: Callable, p: float, domain: Domain, rule: FiberQuadrature = None) -> float:
    """(integral over SM of |u|^p dV_SM)^{1/p}."""
    p = _check_p(p)
    integral = sphere_bundle.integrate_SM(
        metric, domain, sphere_bundle.pullback(lambda x: np.abs(u(x)) ** p), _rule(metric, rule)
    )
    return float(max(integral, 0.0) ** (1.0 / p))


def lp_norm_M(metric: FinslerMetric, u: Callable, p: float, domain: Domain, rule: FiberQuadrature = None) -> float:
    """(integral over M of |u|^p dV_F)^{1/p}."""
    p = _check_p(p)
    integral = sphere_bundle.integrate_M(metric, domain, lambda x: np.abs(u(x)) ** p, _rule(metric, rule))
    return float(max(integral, 0.0) ** (1.0 / p))


def gradient_lp_norm_SM(metric: FinslerMetric, u: ScalarField, p: float, domain: Domain, rule: FiberQuadrature = None) -> float:
    """(integral over SM of |grad u|^p dV_SM)^{1/p}."""
    p = _check_p(p)
    rule = _rule(metric, rule)
    nodes = domain.nodes()
    du = np.asarray(u.grad(nodes), dtype=float)
    if not np.all(np.isfinite(du)):
        bad = nodes[~np.all(np.isfinite(du), axis=-1)][:10].tolist()
        raise IntegrationError(f"field gradient is not finite at {bad}", bad)
    g, weights = sphere_bundle.fiber_tensors(metric, nodes, rule)
    integral = float(np.sum(domain.weights() * np.sum(_gradient_power(g, du, p) * weights, axis=1)))
    return float(max(integral, 0.0) ** (1.0 / p))


def sobolev_norm(metric: FinslerMetric, u: ScalarField, spec: SpecLike, domain: Domain, rule: FiberQuadrature = None) -> float:
    """
    H_k^p(M) norm, the sum over j <= k of (integral over SM of |grad^j u|^p)^{1/p}.

    Args:
        metric: Finsler metric
        u: Field (needs a gradient when k = 1)
        spec: SobolevSpec or a (k, p) pair
        domain: Base domain
        rule: Fiber rule

    Raises:
        UnsupportedOrderError: If k >= 2
    """
    k, p = _order(spec)
    norm = lp_norm_SM(metric, u, p, domain, rule)
    if k == 1:
        norm += gradient_lp_norm_SM(metric, u, p, domain, rule)
    return norm


def gs_norm(metric: FinslerMetric, u: ScalarField, domain: Domain, rule: FiberQuadrature = None) -> float:
    """
    Ge-Shen norm (int u^2 dV_F)^{1/2} + (int F*(du)^2 dV_F)^{1/2}.

    Raises:
        ReversibilityError: If the metric is not reversible
    """
    if not metric.reversible:
        logger.warning("refusing Ge-Shen norm for irreversible %s", metric.describe())
        raise ReversibilityError(f"Ge-Shen norm needs a reversible metric, got {metric.describe()}")
    rule = _rule(metric, rule)
    nodes = domain.nodes()
    density = sphere_bundle.volume_density(metric, nodes, rule)
    weights = domain.weights() * density
    values = _samples(u, nodes)
    dual = dual_norm(metric, nodes, u.grad(nodes))
    return float(np.sqrt(np.sum(weights * values**2)) + np.sqrt(np.sum(weights * dual**2)))


def classical_sobolev_norm(u: ScalarField, spec: SpecLike, domain: Domain) -> float:
    """Flat-chart norm ||u||_p + ||Du||_p (k = 1) with Lebesgue measure."""
    k, p = _order(spec)
    nodes = domain.nodes()
    weights = domain.weights()
    norm = float(np.sum(weights * np.abs(_samples(u, nodes)) ** p) ** (1.0 / p))
    if k == 1:
        du = np.linalg.norm(u.grad(nodes), axis=-1)
        norm += float(np.sum(weights * du**p) ** (1.0 / p))
    return norm
