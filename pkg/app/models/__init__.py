"""
Geometric data models package.

This package contains the points, tangent vectors, curves, domains,
quadrature rules and scalar fields the services operate on.
"""


from .geometry import Curve, Point, TangentVector
from .domain import Domain, FiberQuadrature
from .field import GridField, ScalarField, build_field

__all__ = [
    "Curve",
    "Point",
    "TangentVector",
    "Domain",
    "FiberQuadrature",
    "GridField",
    "ScalarField",
    "build_field",
]
