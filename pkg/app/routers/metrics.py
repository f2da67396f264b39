"""
Metric API routes.

Validity checks and forward distances for zoo metrics.
"""

from fastapi import APIRouter, HTTPException, status

from ..config import settings
from ..schemas.api import DistanceRequest, DistanceResponse, MetricCheckRequest
from ..schemas.check import MetricCheckReport
from ..services.metric_zoo import FinslerMetric, build_metric, validate_metric
from ..services.spray_geodesics import DistanceProvider, distance
from ..utils.errors import FinslerError


router = APIRouter(prefix="/metrics", tags=["Metrics"])


def _metric(spec) -> FinslerMetric:
    try:
        return build_metric(spec.kind, spec.dimension, spec.b, spec.a, spec.epsilon, spec.lam, spec.scale)
    except ValueError as exc:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(exc))


@router.post("/check", response_model=MetricCheckReport)
def check_metric(request: MetricCheckRequest):
    """
    Run the metric validity suite.

    Args:
        request: Metric and sample count

    Returns:
        MetricCheckReport: Positivity, homogeneity, symmetry and eigenvalue results
    """
    metric = _metric(request.metric)
    try:
        return validate_metric(metric, request.samples, settings.SEED)
    except FinslerError as exc:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=f"{type(exc).__name__}: {exc}")


@router.post("/distance", response_model=DistanceResponse)
def forward_distance(request: DistanceRequest):
    """
    Forward distance d(x1, x2) for a zoo metric.

    Returns:
        DistanceResponse: Distance and the provider that computed it
    """
    metric = _metric(request.metric)
    spec = request.distance
    try:
        if spec.tier is None:
            provider = DistanceProvider.auto(metric, spec.grid_n)
        else:
            provider = DistanceProvider(spec.tier, spec.grid_n, spec.descent_iters)
        value = distance(metric, request.x1, request.x2, provider)
    except ValueError as exc:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(exc))
    except FinslerError as exc:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=f"{type(exc).__name__}: {exc}")
    return DistanceResponse(distance=value, provider=provider.describe())
