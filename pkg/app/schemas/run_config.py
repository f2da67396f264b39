"""
Run configuration schemas.

A run configuration is a flat ``key = value`` document; keys are dotted
(``metric.kind``, ``sobolev.p``) and map onto the nested models below.
Unknown keys are rejected.
"""

from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..config import settings
from ..models.domain import Domain, MIN_RESOLUTION
from ..models.field import FIELD_CATALOG


Experiment = Literal["norm", "density", "mollify", "geodesic", "fiber_decay", "sharpness", "dirichlet", "check"]

# metric kinds whose forward distance has no closed form
NO_CLOSED_FORM = frozenset({"conformal"})

# open unit ball less the Funk guard margin; default chart of funk runs
FUNK_CHART_RADIUS = 1.0 - 1e-9


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class MetricSpec(StrictModel):
    """
    Zoo metric selection.

    Attributes:
        kind: euclidean, conformal, randers, funk or quartic
        dimension: n in {1, 2, 3}
        b: Randers covector (required for randers)
        a: Randers Riemannian matrix (identity when omitted)
        epsilon: Quartic perturbation strength in (0, 0.2]
        lam: Conformal factor coefficients, lambda(x) = lam . x
        scale: Euclidean scale s, F = s |y|
    """
    kind: Literal["euclidean", "conformal", "randers", "funk", "quartic"] = "euclidean"
    dimension: int = Field(2, ge=1, le=3)
    b: Optional[List[float]] = None
    a: Optional[List[List[float]]] = None
    epsilon: Optional[float] = Field(None, gt=0, le=0.2)
    lam: Optional[List[float]] = None
    scale: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def check_kind(self):
        if self.kind == "randers" and self.b is None:
            raise ValueError("missing required key metric.b for metric.kind = randers")
        for name in ("b", "lam"):
            value = getattr(self, name)
            if value is not None and len(value) != self.dimension:
                raise ValueError(f"metric.{name} needs {self.dimension} entries, got {len(value)}")
        if self.a is not None and (len(self.a) != self.dimension or any(len(r) != self.dimension for r in self.a)):
            raise ValueError(f"metric.a must be {self.dimension}x{self.dimension}")
        if self.kind == "funk" and self.dimension == 1:
            raise ValueError("funk metric needs dimension 2 or 3")
        return self


class DomainSpec(StrictModel):
    """
    Base domain.

    Attributes:
        kind: box, torus, ball or half_ball
        bounds: [lo, hi] per axis (box)
        periods: Period per axis (torus)
        radius: Radius (ball, half_ball)
    """
    kind: Literal["box", "torus", "ball", "half_ball"] = "box"
    bounds: Optional[List[List[float]]] = None
    periods: Optional[List[float]] = None
    radius: Optional[float] = Field(None, gt=0)

    @field_validator("bounds")
    @classmethod
    def check_bounds(cls, value):
        if value is not None:
            for axis, pair in enumerate(value):
                if len(pair) != 2 or not pair[0] < pair[1]:
                    raise ValueError(f"domain.bounds axis {axis} must be [lo, hi] with lo < hi")
        return value

    def build(self, dimension: int, resolution: int) -> Domain:
        """Concrete ``Domain`` for a metric of the given dimension."""
        if self.kind == "box":
            bounds = self.bounds or [[-6.0, 6.0]] * dimension
            if len(bounds) != dimension:
                raise ValueError(f"domain.bounds has {len(bounds)} axes, metric has {dimension}")
            return Domain.box([b[0] for b in bounds], [b[1] for b in bounds], resolution)
        if self.kind == "torus":
            periods = self.periods or [6.283185307179586] * dimension
            return Domain.torus(periods, resolution)
        radius = self.radius or 1.0
        if self.kind == "ball":
            return Domain.ball(radius, dimension, resolution)
        return Domain.half_ball(radius, dimension, resolution)

    def describe(self) -> str:
        return self.kind


class QuadratureSpec(StrictModel):
    fiber_nodes: int = Field(default_factory=lambda: settings.FIBER_NODES, ge=4)
    base_resolution: int = Field(default_factory=lambda: settings.BASE_RESOLUTION, ge=MIN_RESOLUTION)


class SobolevSpec(StrictModel):
    """
    Sobolev order and exponent.

    Attributes:
        k: Order in {0, 1}
        p: Exponent, p >= 1
    """
    k: int = 1
    p: float = Field(2.0, ge=1)

    @field_validator("k")
    @classmethod
    def check_order(cls, value):
        if value not in (0, 1):
            raise ValueError(f"unsupported order k={value} (k must be 0 or 1)")
        return value


class DistanceSpec(StrictModel):
    """Distance provider; ``tier`` defaults to closed_form when available."""
    tier: Optional[Literal["closed_form", "grid_dijkstra", "curve_descent"]] = None
    grid_n: int = Field(128, ge=8)
    descent_iters: int = Field(200, ge=1)


class FieldSpec(StrictModel):
    name: str = "gaussian"
    width: Optional[float] = Field(None, gt=0)
    radius: Optional[float] = Field(None, gt=0)

    @field_validator("name")
    @classmethod
    def check_name(cls, value):
        if value not in FIELD_CATALOG:
            raise ValueError(f"unknown field '{value}'; choose from {sorted(FIELD_CATALOG)}")
        return value

    @model_validator(mode="after")
    def check_width(self):
        if self.name == "ramp" and self.width is None:
            raise ValueError("missing required key field.width for field.name = ramp")
        return self


def _strictly_decreasing(values: List[float], key: str) -> List[float]:
    if not values:
        raise ValueError(f"{key} must not be empty")
    if any(v <= 0 for v in values):
        raise ValueError(f"{key} entries must be positive")
    if any(b >= a for a, b in zip(values, values[1:])):
        raise ValueError(f"{key} must be strictly decreasing")
    return values


class DensityParams(StrictModel):
    jmax: int = Field(8, ge=1, le=64)
    center: Optional[List[float]] = None


class MollifyParams(StrictModel):
    eps_list: List[float] = Field(default_factory=lambda: [0.5, 0.25, 0.125, 0.0625])
    margin: Optional[float] = Field(None, ge=0)

    @field_validator("eps_list")
    @classmethod
    def check_eps(cls, value):
        return _strictly_decreasing(value, "mollify.eps_list")


class GeodesicParams(StrictModel):
    start: Optional[List[float]] = None
    velocity: Optional[List[float]] = None
    T: float = Field(1.0, gt=0)
    steps: int = Field(64, ge=16)


class FiberDecayParams(StrictModel):
    L_list: List[float] = Field(default_factory=lambda: [1.0, 2.0, 5.0, 10.0])
    resolution: int = Field(4096, ge=MIN_RESOLUTION)

    @field_validator("L_list")
    @classmethod
    def check_lengths(cls, value):
        if not value or any(v < 1.0 for v in value):
            raise ValueError("fiber_decay.L_list entries must be at least 1")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("fiber_decay.L_list must be strictly increasing")
        return value


class SharpnessParams(StrictModel):
    p: float = Field(2.0, ge=1)
    widths: List[float] = Field(default_factory=lambda: [round(0.1 * i, 1) for i in range(1, 11)])
    resolution: int = Field(400, ge=MIN_RESOLUTION)

    @field_validator("widths")
    @classmethod
    def check_widths(cls, value):
        if not value or any(not 0.0 < w <= 1.0 for w in value):
            raise ValueError("sharpness.widths must lie in (0, 1]")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("sharpness.widths must be strictly increasing")
        return value


class DirichletParams(StrictModel):
    N: int = Field(32, ge=16)
    rhs: Literal["cos1", "cos2", "zero"] = "cos1"
    eps_list: List[float] = Field(default_factory=lambda: [0.5, 0.25, 0.125, 0.0625, 0.03125])

    @field_validator("N")
    @classmethod
    def check_power_of_two(cls, value):
        if value & (value - 1):
            raise ValueError(f"dirichlet.N must be a power of two, got {value}")
        return value

    @field_validator("eps_list")
    @classmethod
    def check_eps(cls, value):
        return _strictly_decreasing(value, "dirichlet.eps_list")


class CheckParams(StrictModel):
    samples: int = Field(100, ge=100)


class RunConfig(StrictModel):
    """
    A fully validated run.

    Attributes:
        experiment: Which experiment to run
        output: CSV path (the CLI's --out overrides it)
        seed: Seed for every sampling step
    """
    experiment: Experiment
    output: Optional[str] = None
    seed: int = Field(default_factory=lambda: settings.SEED)
    metric: MetricSpec = Field(default_factory=MetricSpec)
    domain: DomainSpec = Field(default_factory=DomainSpec)
    quad: QuadratureSpec = Field(default_factory=QuadratureSpec)
    sobolev: SobolevSpec = Field(default_factory=SobolevSpec)
    field: FieldSpec = Field(default_factory=FieldSpec)
    distance: DistanceSpec = Field(default_factory=DistanceSpec)
    density: DensityParams = Field(default_factory=DensityParams)
    mollify: MollifyParams = Field(default_factory=MollifyParams)
    geodesic: GeodesicParams = Field(default_factory=GeodesicParams)
    fiber_decay: FiberDecayParams = Field(default_factory=FiberDecayParams)
    sharpness: SharpnessParams = Field(default_factory=SharpnessParams)
    dirichlet: DirichletParams = Field(default_factory=DirichletParams)
    check: CheckParams = Field(default_factory=CheckParams)

    @model_validator(mode="after")
    def default_funk_chart(self):
        if self.metric.kind == "funk" and "domain" not in self.model_fields_set:
            self.domain = DomainSpec(kind="ball", radius=FUNK_CHART_RADIUS)
        return self

    @model_validator(mode="after")
    def check_distance_tier(self):
        if self.distance.tier == "closed_form" and self.metric.kind in NO_CLOSED_FORM:
            raise ValueError(
                f"distance.tier = closed_form is unavailable for metric.kind = {self.metric.kind}; "
                "use grid_dijkstra or curve_descent"
            )
        return self
