"""
Utility functions package.

This package contains the exception hierarchy and the finite-difference
helpers used across the services.
"""

from .errors import *
