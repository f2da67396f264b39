"""
Configuration settings for the Finsler Sobolev toolkit.

This module handles loading environment variables and defining
the defaults shared by every numerical service.
"""

import os


class Settings:
    """
    Toolkit settings loaded from environment variables.

    Attributes:
        THREADS: Worker threads used by the quadrature loops
        SEED: Seed for every random sampling operation
        LOG_LEVEL: Root logging level configured by the CLI
        FIBER_NODES: Default number of fiber quadrature nodes (per angle)
        BASE_RESOLUTION: Default base-grid cells per axis
        MAX_RESOLUTION: Upper bound for automatically refined grids
    """

    # Numerical defaults
    THREADS: int = int(os.getenv("FINSLER_THREADS", "1"))
    SEED: int = int(os.getenv("FINSLER_SEED", "20240611"))
    FIBER_NODES: int = int(os.getenv("FINSLER_FIBER_NODES", "32"))
    BASE_RESOLUTION: int = int(os.getenv("FINSLER_BASE_RESOLUTION", "128"))
    MAX_RESOLUTION: int = int(os.getenv("FINSLER_MAX_RESOLUTION", "2048"))

    # Logging
    LOG_LEVEL: str = os.getenv("FINSLER_LOG_LEVEL", "INFO")

    # Application settings
    API_V1_PREFIX: str = "/api/v1"
    PROJECT_NAME: str = "Finsler Sobolev Toolkit"
    VERSION: str = "1.0.0"


settings = Settings()
