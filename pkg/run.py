"""
Finsler Sobolev Toolkit Runner.

This script runs the command-line interface; ``python run.py serve``
starts the uvicorn server for the FastAPI application.
"""

import sys

from app.cli import main


if __name__ == "__main__":
    sys.exit(main())
