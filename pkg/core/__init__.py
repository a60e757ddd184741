"""
Core module for admg-bayes.

This module contains the orchestration layer: protocols, configuration,
the command registry and decorator, the router and the harness facade.
"""

from core.command_decorator import (
    CommandSpec,
    get_registered_commands,
    list_command_names,
)
from core.config import SAMPLING_COMMANDS, RunConfig
from core.constants import EXIT_NUMERICAL, EXIT_SUCCESS, EXIT_VALIDATION, __version__
from core.errors import (
    AdmgError,
    GraphError,
    GraphParseError,
    MembershipError,
    NumericalError,
    ValidationError,
    VariationalDivergenceError,
)
from core.protocols import CommandExecutor, Dispatcher, FitResult, InferenceEngine

__all__ = [
    # Protocols
    "CommandExecutor",
    "Dispatcher",
    "FitResult",
    "InferenceEngine",
    # Configuration
    "RunConfig",
    "SAMPLING_COMMANDS",
    # Constants
    "EXIT_NUMERICAL",
    "EXIT_SUCCESS",
    "EXIT_VALIDATION",
    "__version__",
    # Errors
    "AdmgError",
    "GraphError",
    "GraphParseError",
    "MembershipError",
    "NumericalError",
    "ValidationError",
    "VariationalDivergenceError",
    # Command decorator
    "CommandSpec",
    "get_registered_commands",
    "list_command_names",
]
