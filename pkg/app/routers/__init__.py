"""
API routers package.

This package contains the FastAPI router modules for runs and metrics.
"""

from .metrics import router as metrics_router
from .runs import router as runs_router


__all__ = [
    "metrics_router",
    "runs_router",
]
