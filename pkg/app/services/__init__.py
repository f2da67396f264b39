"""
Numerical services package.

This package contains the metric zoo, geodesics and distances, sphere
bundle quadrature, Sobolev norms, approximation schemes, worked examples
and the experiment runner.
"""

from .metric_zoo import FinslerMetric, build_metric
from .spray_geodesics import DistanceProvider

__all__ = ["FinslerMetric", "build_metric", "DistanceProvider"]
