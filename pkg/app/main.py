"""
Finsler Sobolev Toolkit FastAPI Application.

This module configures the HTTP surface of the toolkit: it includes the
run and metric routers and sets up middleware.
"""

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from .config import settings
from .routers import metrics_router, runs_router


def create_app() -> FastAPI:
    """
    Create and configure the FastAPI application.

    Returns:
        FastAPI: Configured FastAPI application instance
    """
    app = FastAPI(
        title=settings.PROJECT_NAME,
        version=settings.VERSION,
        description="Sobolev spaces on Finsler manifolds: norms, density and approximation experiments",
        docs_url="/docs",
        redoc_url="/redoc",
    )

    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_credentials=True,
        allow_methods=["*"],
        allow_headers=["*"],
    )

    app.include_router(runs_router, prefix=settings.API_V1_PREFIX)
    app.include_router(metrics_router, prefix=settings.API_V1_PREFIX)

    @app.get("/")
    async def root():
        """
        Root endpoint.

        Returns:
            dict: Welcome message and API version
        """
        return {
            "message": f"Welcome to the {settings.PROJECT_NAME} API",
            "version": settings.VERSION,
            "docs": "/docs",
        }

    @app.get("/health")
    async def health_check():
        return {"status": "healthy"}

    return app


app = create_app()
