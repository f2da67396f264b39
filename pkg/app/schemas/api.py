"""
HTTP request and response schemas.

The run endpoint accepts the same flat ``key = value`` text as the CLI;
the metric endpoints take structured bodies built from the run
configuration models.
"""

from typing import List

from pydantic import BaseModel, Field, model_validator

from .run_config import DistanceSpec, MetricSpec


class RunRequest(BaseModel):
    """
    Schema for submitting a run.

    Attributes:
        config: Flat configuration text, one ``key = value`` per line
    """
    config: str = Field(..., min_length=1)


class MetricCheckRequest(BaseModel):
    metric: MetricSpec
    samples: int = Field(100, ge=100)


class DistanceRequest(BaseModel):
    """
    Schema for a forward distance query.

    Attributes:
        metric: Metric selection
        x1: Start point
        x2: End point
        distance: Provider selection (closed form when available by default)
    """
    metric: MetricSpec
    x1: List[float]
    x2: List[float]
    distance: DistanceSpec = Field(default_factory=DistanceSpec)

    @model_validator(mode="after")
    def check_points(self):
        n = self.metric.dimension
        if len(self.x1) != n or len(self.x2) != n:
            raise ValueError(f"x1 and x2 need {n} coordinates")
        return self


class DistanceResponse(BaseModel):
    distance: float = Field(..., ge=0)
    provider: str
