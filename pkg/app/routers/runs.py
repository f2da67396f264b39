"""
Run API routes.

This module exposes the experiment runner over HTTP. The request body
carries the same configuration text the CLI reads from ``--config``.
"""

import logging

from fastapi import APIRouter, HTTPException, status

from ..schemas.api import RunRequest
from ..schemas.table import RunReport
from ..services import reporting
from ..services.config_parser import parse_config
from ..utils.errors import ConfigError, FinslerError


logger = logging.getLogger(__name__)

router = APIRouter(prefix="/runs", tags=["Runs"])


@router.post("", response_model=RunReport)
def create_run(request: RunRequest):
    """
    Validate a configuration and run its experiment.

    Args:
        request: Configuration text

    Returns:
        RunReport: Configuration echo, timing and the result table

    Raises:
        HTTPException: 422 with every configuration error, 400 on numerical failure
    """
    try:
        config = parse_config(request.config)
        return reporting.execute(config)
    except ConfigError as exc:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=exc.errors)
    except FinslerError as exc:
        logger.warning("run failed: %s: %s", type(exc).__name__, exc)
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=f"{type(exc).__name__}: {exc}")
