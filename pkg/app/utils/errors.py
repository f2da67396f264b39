"""
Exception hierarchy for the toolkit.

Services raise these; the CLI maps them to exit codes and the routers
translate them into HTTP errors.
"""

from typing import List, Optional


class FinslerError(Exception):
    """Base class for every numerical failure raised by the services."""


class MetricDomainError(FinslerError):
    """A metric was queried outside the chart it is defined on."""


class MetricValidityError(FinslerError):
    """A metric descriptor violates the Finsler structure axioms."""


class IntegrationError(FinslerError):
    """Quadrature met non-finite samples."""

    def __init__(self, message: str, offending_nodes: Optional[list] = None):
        super().__init__(message)
        self.offending_nodes = offending_nodes or []


class UnreachableError(FinslerError):
    """A distance target is cut off from the source by a domain truncation."""


class ReversibilityError(FinslerError):
    """An operation that needs a reversible metric got an irreversible one."""


class UnsupportedOrderError(FinslerError):
    """Sobolev order outside {0, 1}."""


class HypothesisViolationError(FinslerError):
    """Input violates a hypothesis the computation depends on."""


class MollifierResolutionError(FinslerError):
    """Mollifier radius is too small for the grid spacing."""


class CoverError(FinslerError):
    """A cover of boxes leaves part of the requested region uncovered."""


class ConfigError(FinslerError):
    """
    Invalid run configuration.

    Attributes:
        errors: Every problem found, each prefixed with its line number
    """

    def __init__(self, errors: List[str]):
        super().__init__("; ".join(errors))
        self.errors = list(errors)
