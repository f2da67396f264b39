"""
Metric validity report schemas.

This module defines the reports produced by the metric validity suite
and returned by the metric check endpoint.
"""

from typing import List

from pydantic import BaseModel, Field


class HomogeneityReport(BaseModel):
    """
    Result of a positive-homogeneity check.

    Attributes:
        max_relative_deviation: max |F(x, ly) - l F(x, y)| / (l F(x, y))
        samples: Number of tangent vectors checked
        lambdas: Scaling factors used
    """
    max_relative_deviation: float = Field(..., ge=0)
    samples: int = Field(..., ge=1)
    lambdas: List[float]


class MetricCheckReport(BaseModel):
    """
    Result of the metric validity suite.

    Attributes:
        metric: Metric description
        samples: Number of random (x, y) samples
        min_F: Smallest F over the samples (must be positive)
        max_homogeneity_deviation: Worst relative homogeneity deviation
        max_asymmetry: Largest |g_ij - g_ji| before symmetrisation
        min_eigenvalue: Smallest eigenvalue of g over the samples
        valid: True when every check passes
    """
    metric: str
    samples: int
    min_F: float
    max_homogeneity_deviation: float
    max_asymmetry: float
    min_eigenvalue: float
    valid: bool
