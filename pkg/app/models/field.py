"""
Scalar fields on the base manifold and the built-in field catalog.

A field u on M doubles as its pullback u o pi on the sphere bundle, so
the same object is measured by the L^p(M) and L^p(SM) norms.
"""

import math
from dataclasses import dataclass
from typing import Callable, Literal, Optional

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from ..utils.numerics import central_gradient
from .domain import Domain


Smoothness = Literal["smooth", "piecewise", "discrete-grid"]


@dataclass
class ScalarField:
    """
    A real function on M with an optional analytic gradient.

    Attributes:
        value: Callable mapping points (..., n) to values (...)
        gradient: Callable mapping points (..., n) to covectors (..., n)
        smoothness: smooth, piecewise or discrete-grid
        fd_step: Relative central-difference step used when ``gradient`` is None
        name: Label carried into report metadata
    """
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    smoothness: Smoothness = "smooth"
    fd_step: Optional[float] = 1e-6
    name: str = "field"

    def __post_init__(self):
        if self.gradient is None and self.fd_step is None:
            raise ValueError(f"field '{self.name}' has no gradient and no finite-difference step")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self.value(x), dtype=float), x.shape[:-1]).copy()

    def grad(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.gradient is not None:
            return np.broadcast_to(np.asarray(self.gradient(x), dtype=float), x.shape).copy()
        return central_gradient(self.value, x, self.fd_step)

    def __add__(self, other: "ScalarField") -> "ScalarField":
        return _combine(self, other, 1.0, f"{self.name}+{other.name}")

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        return _combine(self, other, -1.0, f"{self.name}-{other.name}")

    def __mul__(self, factor: float) -> "ScalarField":
        factor = float(factor)
        return ScalarField(
            value=lambda x: factor * self(x),
            gradient=lambda x: factor * self.grad(x),
            smoothness=self.smoothness,
            name=f"{factor:g}*{self.name}",
        )

    __rmul__ = __mul__

    def __neg__(self) -> "ScalarField":
        return self * -1.0

    def times(self, other: "ScalarField") -> "ScalarField":
        """Pointwise product with the product-rule gradient."""
        return ScalarField(
            value=lambda x: self(x) * other(x),
            gradient=lambda x: self.grad(x) * other(x)[..., None] + self(x)[..., None] * other.grad(x),
            smoothness=_worst(self.smoothness, other.smoothness),
            name=f"{self.name}*{other.name}",
        )

    def translated(self, shift: np.ndarray, name: str = None) -> "ScalarField":
        """x -> u(x - shift)."""
        shift = np.asarray(shift, dtype=float)
        return ScalarField(
            value=lambda x: self(np.asarray(x, float) - shift),
            gradient=lambda x: self.grad(np.asarray(x, float) - shift),
            smoothness=self.smoothness,
            name=name or f"{self.name}(x-{shift.tolist()})",
        )


def _worst(a: Smoothness, b: Smoothness) -> Smoothness:
    order = ["smooth", "piecewise", "discrete-grid"]
    return order[max(order.index(a), order.index(b))]


def _combine(u: ScalarField, v: ScalarField, sign: float, name: str) -> ScalarField:
    return ScalarField(
        value=lambda x: u(x) + sign * v(x),
        gradient=lambda x: u.grad(x) + sign * v.grad(x),
        smoothness=_worst(u.smoothness, v.smoothness),
        name=name,
    )


class GridField(ScalarField):
    """
    A field known only by its samples on a domain grid.

    Values between nodes are linearly interpolated; torus grids wrap.
    Gradients come from ``gradient_values`` when given, otherwise from
    second-order differences of the samples.
    """

    def __init__(self, domain: Domain, values: np.ndarray, gradient_values: np.ndarray = None, name: str = "grid"):
        self.domain = domain
        self.values = np.asarray(values, dtype=float)
        if self.values.shape != domain.shape:
            raise ValueError(f"grid values have shape {self.values.shape}, domain expects {domain.shape}")
        if gradient_values is None:
            gradient_values = self._difference_gradient()
        self.gradient_values = np.asarray(gradient_values, dtype=float)
        self._value_interp = self._interpolator(self.values)
        self._grad_interp = self._interpolator(self.gradient_values)
        super().__init__(
            value=self._evaluate,
            gradient=self._evaluate_gradient,
            smoothness="discrete-grid",
            fd_step=None,
            name=name,
        )

    def _difference_gradient(self) -> np.ndarray:
        spacing = self.domain.spacing
        if self.domain.periodic:
            parts = [
                (np.roll(self.values, -1, axis=a) - np.roll(self.values, 1, axis=a)) / (2.0 * spacing[a])
                for a in range(self.domain.dimension)
            ]
        else:
            parts = np.gradient(self.values, *spacing, edge_order=2)
            if self.domain.dimension == 1:
                parts = [parts]
        return np.stack(parts, axis=-1)

    def _interpolator(self, data: np.ndarray) -> RegularGridInterpolator:
        axes = self.domain.axes()
        if self.domain.periodic:
            for a in range(self.domain.dimension):
                axes[a] = np.append(axes[a], self.domain.hi[a])
                first = np.take(data, [0], axis=a)
                data = np.concatenate([data, first], axis=a)
        return RegularGridInterpolator(tuple(axes), data, bounds_error=False, fill_value=None)

    def _wrap(self, x: np.ndarray) -> np.ndarray:
        if not self.domain.periodic:
            return x
        lo = np.asarray(self.domain.lo)
        period = np.asarray(self.domain.hi) - lo
        return lo + np.mod(x - lo, period)

    def _evaluate(self, x: np.ndarray) -> np.ndarray:
        x = self._wrap(np.asarray(x, float))
        return self._value_interp(x.reshape(-1, x.shape[-1])).reshape(x.shape[:-1])

    def _evaluate_gradient(self, x: np.ndarray) -> np.ndarray:
        x = self._wrap(np.asarray(x, float))
        return self._grad_interp(x.reshape(-1, x.shape[-1])).reshape(x.shape)

    def samples(self) -> np.ndarray:
        """Values at the domain's quadrature nodes, in ``Domain.nodes`` order."""
        return self.values[self.domain.mask()]

    def gradient_samples(self) -> np.ndarray:
        return self.gradient_values[self.domain.mask()]


# ---------------------------------------------------------------------------
# Field catalog
# ---------------------------------------------------------------------------

def gaussian() -> ScalarField:
    """u = exp(-|x|^2)."""
    def value(x):
        return np.exp(-np.sum(x**2, axis=-1))

    def gradient(x):
        return -2.0 * x * value(x)[..., None]

    return ScalarField(value, gradient, name="gaussian")


def coordinate(axis: int = 0) -> ScalarField:
    """u = x^{axis+1}."""
    def gradient(x):
        g = np.zeros_like(x)
        g[..., axis] = 1.0
        return g

    return ScalarField(lambda x: x[..., axis], gradient, name=f"coordinate{axis + 1}")


def constant(c: float) -> ScalarField:
    return ScalarField(lambda x: np.full(x.shape[:-1], float(c)), lambda x: np.zeros_like(x), name=f"constant({c:g})")


def zero() -> ScalarField:
    field = constant(0.0)
    field.name = "zero"
    return field


def step() -> ScalarField:
    """u = 1 for x^1 > 0, else 0; gradient zero away from x^1 = 0."""
    return ScalarField(
        lambda x: (x[..., 0] > 0.0).astype(float),
        lambda x: np.zeros_like(x),
        smoothness="piecewise",
        name="step",
    )


def smoothstep(t: np.ndarray) -> np.ndarray:
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def ramp(width: float) -> ScalarField:
    """C^1 cubic ramp from 0 to 1 across x^1 in [-width/2, width/2]."""
    if not 0.0 < width:
        raise ValueError("ramp width must be positive")

    def value(x):
        return smoothstep((x[..., 0] + 0.5 * width) / width)

    def gradient(x):
        t = np.clip((x[..., 0] + 0.5 * width) / width, 0.0, 1.0)
        g = np.zeros_like(x)
        g[..., 0] = 6.0 * t * (1.0 - t) / width
        return g

    return ScalarField(value, gradient, name=f"ramp({width:g})")


def bump(radius: float = 0.5, center=None) -> ScalarField:
    """exp(1 / (|x - c|^2 / r^2 - 1)) inside |x - c| < r, zero outside."""
    def offset(x):
        c = np.zeros(x.shape[-1]) if center is None else np.asarray(center, float)
        return x - c

    def value(x):
        q = np.sum(offset(x) ** 2, axis=-1) / radius**2
        inside = q < 1.0
        out = np.zeros(q.shape)
        out[inside] = np.exp(1.0 / (q[inside] - 1.0))
        return out

    def gradient(x):
        d = offset(x)
        q = np.sum(d**2, axis=-1) / radius**2
        inside = q < 1.0
        factor = np.zeros(q.shape)
        factor[inside] = -np.exp(1.0 / (q[inside] - 1.0)) / (q[inside] - 1.0) ** 2 * 2.0 / radius**2
        return factor[..., None] * d

    return ScalarField(value, gradient, name=f"bump({radius:g})")


def sine() -> ScalarField:
    """u = sin(pi x^1)."""
    def gradient(x):
        g = np.zeros_like(x)
        g[..., 0] = math.pi * np.cos(math.pi * x[..., 0])
        return g

    return ScalarField(lambda x: np.sin(math.pi * x[..., 0]), gradient, name="sine")


def cos1() -> ScalarField:
    """u = cos(x^1)."""
    def gradient(x):
        g = np.zeros_like(x)
        g[..., 0] = -np.sin(x[..., 0])
        return g

    return ScalarField(lambda x: np.cos(x[..., 0]), gradient, name="cos1")


def cos2() -> ScalarField:
    """u = cos(x^1) cos(x^2)."""
    def gradient(x):
        g = np.zeros_like(x)
        g[..., 0] = -np.sin(x[..., 0]) * np.cos(x[..., 1])
        g[..., 1] = -np.cos(x[..., 0]) * np.sin(x[..., 1])
        return g

    return ScalarField(lambda x: np.cos(x[..., 0]) * np.cos(x[..., 1]), gradient, name="cos2")


FIELD_CATALOG = {
    "gaussian": gaussian,
    "coordinate": coordinate,
    "step": step,
    "ramp": ramp,
    "bump": bump,
    "sine": sine,
    "cos1": cos1,
    "cos2": cos2,
    "zero": zero,
}


def build_field(name: str, width: float = None, radius: float = None) -> ScalarField:
    """
    Build a catalog field by name.

    Args:
        name: Catalog key
        width: Ramp width, required for ``ramp``
        radius: Support radius for ``bump`` (default 0.5)

    Returns:
        ScalarField: The requested field
    """
    if name not in FIELD_CATALOG:
        raise ValueError(f"unknown field '{name}'; choose from {sorted(FIELD_CATALOG)}")
    if name == "ramp":
        if width is None:
            raise ValueError("field 'ramp' needs a width")
        return ramp(width)
    if name == "bump":
        return bump(radius if radius is not None else 0.5)
    return FIELD_CATALOG[name]()
