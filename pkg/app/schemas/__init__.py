"""
Pydantic schema package for configuration, reports and API validation.

This package contains the run configuration models, the result tables
and the request/response bodies of the HTTP API.
"""


from .api import *
from .check import *
from .run_config import *
from .table import *
