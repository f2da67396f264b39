"""
Points, tangent vectors and sampled curves on a chart of M.
"""

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np


ArrayLike = Union[Sequence[float], np.ndarray]

SUPPORTED_DIMENSIONS = (1, 2, 3)


def _as_coords(values: ArrayLike, what: str) -> np.ndarray:
    coords = np.atleast_1d(np.asarray(values, dtype=float))
    if coords.ndim != 1:
        raise ValueError(f"{what} must be a flat vector, got shape {coords.shape}")
    if coords.shape[0] not in SUPPORTED_DIMENSIONS:
        raise ValueError(f"{what} dimension must be 1, 2 or 3, got {coords.shape[0]}")
    if not np.all(np.isfinite(coords)):
        raise ValueError(f"{what} has non-finite entries: {coords}")
    return coords


@dataclass(frozen=True)
class Point:
    """
    A point of M in chart coordinates.

    Attributes:
        coords: Coordinate vector of length n
    """
    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", _as_coords(self.coords, "point"))

    @property
    def dimension(self) -> int:
        return self.coords.shape[0]


@dataclass(frozen=True)
class TangentVector:
    """
    A vector y in the tangent space at ``base``.

    Attributes:
        base: Foot point
        components: Components of y in the chart frame
    """
    base: Point
    components: np.ndarray

    def __post_init__(self):
        components = _as_coords(self.components, "tangent vector")
        if components.shape[0] != self.base.dimension:
            raise ValueError(
                f"tangent vector has {components.shape[0]} components at a "
                f"{self.base.dimension}-dimensional point"
            )
        object.__setattr__(self, "components", components)

    @classmethod
    def at(cls, x: ArrayLike, y: ArrayLike) -> "TangentVector":
        return cls(Point(x), y)


@dataclass
class Curve:
    """
    A sampled curve sigma: [a, b] -> M.

    Attributes:
        t: Strictly increasing parameters, shape (m,)
        points: sigma(t), shape (m, n)
        velocities: sigma'(t), shape (m, n)
        truncated: True when integration stopped at the chart boundary
    """
    t: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    truncated: bool = False
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.points = np.asarray(self.points, dtype=float)
        self.velocities = np.asarray(self.velocities, dtype=float)
        if self.t.ndim != 1 or self.t.shape[0] < 1:
            raise ValueError("curve needs a 1-D parameter array")
        if self.t.shape[0] > 1 and np.any(np.diff(self.t) <= 0.0):
            raise ValueError("curve parameters must be strictly increasing")
        if self.points.shape != self.velocities.shape or self.points.shape[0] != self.t.shape[0]:
            raise ValueError("curve samples have inconsistent shapes")

    @classmethod
    def segment(cls, start: ArrayLike, end: ArrayLike, samples: int = 64) -> "Curve":
        """Straight segment from ``start`` to ``end`` on t in [0, 1]."""
        start = np.asarray(start, float)
        end = np.asarray(end, float)
        t = np.linspace(0.0, 1.0, samples)
        points = start + t[:, None] * (end - start)
        return cls(t, points, np.tile(end - start, (samples, 1)))

    @classmethod
    def polyline(cls, vertices: np.ndarray) -> "Curve":
        """Piecewise-linear curve through ``vertices`` with unit parameter per segment."""
        vertices = np.asarray(vertices, float)
        deltas = np.diff(vertices, axis=0)
        velocities = np.vstack([deltas, deltas[-1:]])
        return cls(np.arange(vertices.shape[0], dtype=float), vertices, velocities, notes={"polyline": True})

    @property
    def is_polyline(self) -> bool:
        return bool(self.notes.get("polyline"))
