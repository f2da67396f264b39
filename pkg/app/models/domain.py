"""
Base-grid domains and fiber quadrature rules.

A ``Domain`` discretises a single chart of M; a ``FiberQuadrature``
discretises the unit sphere S^{n-1} that parameterises every indicatrix.
"""

import math
from dataclasses import dataclass, replace
from typing import Literal, Sequence, Tuple

import numpy as np

from ..config import settings


MIN_RESOLUTION = 8


def sphere_area(n: int) -> float:
    """c_{n-1}: volume of the unit sphere S^{n-1} in R^n."""
    return {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}[n]


@dataclass(frozen=True)
class FiberQuadrature:
    """
    Quadrature on the unit sphere S^{n-1}.

    Attributes:
        dimension: n, the dimension of M
        nodes: Unit directions theta_k, shape (K, n)
        weights: Positive weights summing to c_{n-1}, shape (K,)
    """
    dimension: int
    nodes: np.ndarray
    weights: np.ndarray

    @classmethod
    def standard(cls, n: int, nodes: int = None) -> "FiberQuadrature":
        """
        Build the default rule for dimension ``n``.

        n = 1 uses the two points {+1, -1}; n = 2 the periodic trapezoid in
        angle; n = 3 Gauss-Legendre in cos(polar angle) times the periodic
        trapezoid in azimuth.
        """
        nodes = nodes or settings.FIBER_NODES
        if n == 1:
            return cls(1, np.array([[1.0], [-1.0]]), np.array([1.0, 1.0]))
        if n == 2:
            if nodes < 4:
                raise ValueError("n = 2 fiber rule needs at least 4 nodes")
            phi = 2.0 * math.pi * np.arange(nodes) / nodes
            directions = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
            return cls(2, directions, np.full(nodes, 2.0 * math.pi / nodes))
        if n == 3:
            polar = max(nodes // 2, 2)
            mu, w_mu = np.polynomial.legendre.leggauss(polar)
            phi = 2.0 * math.pi * np.arange(nodes) / nodes
            mu_grid, phi_grid = np.meshgrid(mu, phi, indexing="ij")
            s = np.sqrt(1.0 - mu_grid**2)
            directions = np.stack([s * np.cos(phi_grid), s * np.sin(phi_grid), mu_grid], axis=-1)
            weights = (w_mu[:, None] * np.full(nodes, 2.0 * math.pi / nodes)[None, :])
            return cls(3, directions.reshape(-1, 3), weights.reshape(-1))
        raise ValueError(f"unsupported dimension {n}")

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))


@dataclass(frozen=True)
class Domain:
    """
    A single-chart base domain with a tensor-product grid.

    Box, ball and half-ball grids use cell midpoints, so kinks of piecewise
    integrands sitting on grid lines never coincide with a node. Torus grids
    start at ``lo`` so they match the FFT sampling.

    Attributes:
        kind: One of box, torus, ball, half_ball
        lo: Lower corner per axis
        hi: Upper corner per axis
        resolution: Cells per axis
    """
    kind: Literal["box", "torus", "ball", "half_ball"]
    lo: Tuple[float, ...]
    hi: Tuple[float, ...]
    resolution: Tuple[int, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi) or len(self.lo) != len(self.resolution):
            raise ValueError("domain bounds and resolution must have one entry per axis")
        if len(self.lo) not in (1, 2, 3):
            raise ValueError(f"domain dimension must be 1, 2 or 3, got {len(self.lo)}")
        for a, (lo, hi) in enumerate(zip(self.lo, self.hi)):
            if not lo < hi:
                raise ValueError(f"domain axis {a}: lo={lo} must be below hi={hi}")
        for a, res in enumerate(self.resolution):
            if res < MIN_RESOLUTION:
                raise ValueError(f"domain axis {a}: resolution {res} is below {MIN_RESOLUTION}")

    @classmethod
    def box(cls, lo: Sequence[float], hi: Sequence[float], resolution=None) -> "Domain":
        return cls("box", tuple(map(float, lo)), tuple(map(float, hi)), cls._resolution(resolution, len(lo)))

    @classmethod
    def torus(cls, periods: Sequence[float], resolution=None) -> "Domain":
        return cls(
            "torus",
            tuple(0.0 for _ in periods),
            tuple(map(float, periods)),
            cls._resolution(resolution, len(periods)),
        )

    @classmethod
    def ball(cls, radius: float, n: int, resolution=None) -> "Domain":
        return cls("ball", (-float(radius),) * n, (float(radius),) * n, cls._resolution(resolution, n))

    @classmethod
    def half_ball(cls, radius: float, n: int, resolution=None) -> "Domain":
        """{|x| < radius, x^1 < 0}."""
        hi = (0.0,) + (float(radius),) * (n - 1)
        return cls("half_ball", (-float(radius),) * n, hi, cls._resolution(resolution, n))

    @staticmethod
    def _resolution(resolution, n: int) -> Tuple[int, ...]:
        if resolution is None:
            resolution = settings.BASE_RESOLUTION
        if isinstance(resolution, (int, np.integer)):
            return (int(resolution),) * n
        return tuple(int(r) for r in resolution)

    @property
    def dimension(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.resolution

    @property
    def spacing(self) -> np.ndarray:
        return (np.asarray(self.hi) - np.asarray(self.lo)) / np.asarray(self.resolution)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def periodic(self) -> bool:
        return self.kind == "torus"

    @property
    def radius(self) -> float:
        """Radius of a ball or half-ball."""
        return -self.lo[0]

    def axes(self) -> list:
        """Grid coordinates along each axis."""
        offset = 0.0 if self.periodic else 0.5
        return [
            lo + (np.arange(res) + offset) * h
            for lo, res, h in zip(self.lo, self.resolution, self.spacing)
        ]

    def grid_points(self) -> np.ndarray:
        """All grid nodes, shape resolution + (n,)."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack(mesh, axis=-1)

    def mask(self) -> np.ndarray:
        """Boolean mask of grid nodes inside the domain."""
        points = self.grid_points()
        if self.kind in ("box", "torus"):
            return np.ones(self.shape, dtype=bool)
        inside = np.linalg.norm(points, axis=-1) < self.radius
        if self.kind == "half_ball":
            inside &= points[..., 0] < 0.0
        return inside

    def nodes(self) -> np.ndarray:
        """Quadrature nodes inside the domain, shape (M, n)."""
        return self.grid_points()[self.mask()]

    def weights(self) -> np.ndarray:
        """Midpoint (box) or periodic trapezoid (torus) weights, shape (M,)."""
        return np.full(int(np.count_nonzero(self.mask())), self.cell_volume)

    def with_resolution(self, resolution) -> "Domain":
        return replace(self, resolution=self._resolution(resolution, self.dimension))

    def with_spacing_at_most(self, h: float) -> "Domain":
        """Refine (never coarsen) so that every axis spacing is at most ``h``."""
        extent = np.asarray(self.hi) - np.asarray(self.lo)
        needed = np.ceil(extent / h).astype(int)
        resolution = np.maximum(np.asarray(self.resolution), needed)
        resolution = np.minimum(resolution, settings.MAX_RESOLUTION)
        return self.with_resolution(tuple(int(r) for r in resolution))

    def describe(self) -> str:
        bounds = ";".join(f"[{lo:g},{hi:g}]" for lo, hi in zip(self.lo, self.hi))
        return f"{self.kind}{bounds}x{'x'.join(map(str, self.resolution))}"
