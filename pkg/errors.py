"""
errors.py

Exception hierarchy of the engine. Every user-facing failure derives
from GeometryError and carries the process exit code the command
front end returns for it.
"""

from utils.constants import EXIT_CHART, EXIT_CONFIG, EXIT_DOMAIN, EXIT_INVARIANT


class GeometryError(Exception):
    """Base class for failures reported to the user."""

    exit_code = 1


# ------------------------------------------------------------
# CONFIGURATION (exit 2)
# ------------------------------------------------------------

class ConfigError(GeometryError):
    """Invalid run configuration, preset, or metric document."""

    exit_code = EXIT_CONFIG


class MetricSyntaxError(ConfigError):
    """Syntax error in a metric document or expression, with its location."""

    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


# ------------------------------------------------------------
# DOMAIN / SINGULARITY (exit 3)
# ------------------------------------------------------------

class DomainError(GeometryError):
    """Point outside the chart domain or non-finite evaluation."""

    exit_code = EXIT_DOMAIN


class SingularMetricError(DomainError):
    """Metric determinant below the singularity threshold."""


class SignatureMismatchError(DomainError):
    """Eigenvalue sign counts of the metric differ from the declared signature."""


# ------------------------------------------------------------
# CHART VALIDITY (exit 4)
# ------------------------------------------------------------

class ChartValidityError(GeometryError):
    """Normal chart used beyond its validity (chart exit, conjugate point, bad bracket)."""

    exit_code = EXIT_CHART


# ------------------------------------------------------------
# INVARIANT FAILURES (exit 5)
# ------------------------------------------------------------

class InvariantError(GeometryError):
    """A checked invariant exceeded its tolerance."""

    exit_code = EXIT_INVARIANT


class NumericalQualityError(InvariantError):
    """Integration drift above the accepted level."""


# ------------------------------------------------------------
# PROGRAMMER ERRORS (tensor plumbing)
# ------------------------------------------------------------

class ShapeError(ValueError):
    """Mismatched extents between tensor slots."""


class SlotKindError(ValueError):
    """Contraction or raise/lower applied to slots of the wrong kind."""
