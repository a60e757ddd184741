"""
Exception hierarchy for admg-bayes.

Library code raises these; the router turns them into status dicts
and process exit codes. Nothing below the router prints.
"""

from typing import Optional

from core.constants import EXIT_NUMERICAL, EXIT_VALIDATION


class AdmgError(Exception):
    """Base class for every error the package raises on purpose."""

    exit_code: int = EXIT_VALIDATION


class ValidationError(AdmgError):
    """Invalid input, configuration or file content."""


class GraphError(ValidationError):
    """A graph violates an ADMG invariant."""


class GraphParseError(GraphError):
    """
    Diagnostic raised while reading the graph text format.

    Attributes:
        kind: One of "syntax", "undeclared", "duplicate", "cycle", "self-loop"
        line: 1-based line number of the offending statement (None if unknown)
    """

    def __init__(self, kind: str, message: str, line: Optional[int] = None):
        self.kind = kind
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{kind}: {message}")


class MembershipError(ValidationError):
    """A matrix is not in M+(G): wrong zero pattern or not positive definite."""


class NumericalError(AdmgError):
    """A factorization failed or a quantity stopped being finite."""

    exit_code = EXIT_NUMERICAL


class VariationalDivergenceError(NumericalError):
    """The variational bound dropped by more than the allowed slack."""
