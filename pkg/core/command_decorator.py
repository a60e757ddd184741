"""
Command decorator system for admg-bayes.

Commands are declared with a CommandSpec whose JSON-Schema style input
definition drives both the argparse surface (core.parser_builder) and the
help text, so a command is added without touching the parser or router.
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple


@dataclass
class CommandSpec:
    """
    Specification for a CLI command.

    Attributes:
        name: The command name typed on the command line
        description: One-line help text
        input_schema: JSON Schema of the flags; property names are flag names
        outputs: Output file keys (core.constants.OUTPUT_FILES) the command writes
        returns_description: What the status dict reports on success
    """
    name: str
    description: str
    input_schema: Dict[str, Any] = field(default_factory=lambda: {
        "type": "object",
        "properties": {},
        "required": []
    })
    outputs: Tuple[str, ...] = ()
    returns_description: Optional[str] = None


# =============================================================================
# SCHEMA HELPERS - Make defining common flag types easy
# =============================================================================

def string_param(
    description: str, enum: Optional[List[str]] = None, default: Optional[str] = None
) -> Dict[str, Any]:
    """Create a string parameter schema."""
    schema = {"type": "string", "description": description}
    if enum:
        schema["enum"] = enum
    if default is not None:
        schema["default"] = default
    return schema


def int_param(
    description: str,
    minimum: Optional[int] = None,
    maximum: Optional[int] = None,
    default: Optional[int] = None,
) -> Dict[str, Any]:
    """Create an integer parameter schema."""
    schema = {"type": "integer", "description": description}
    if minimum is not None:
        schema["minimum"] = minimum
    if maximum is not None:
        schema["maximum"] = maximum
    if default is not None:
        schema["default"] = default
    return schema


def float_param(description: str, default: Optional[float] = None) -> Dict[str, Any]:
    """Create a number parameter schema."""
    schema = {"type": "number", "description": description}
    if default is not None:
        schema["default"] = default
    return schema


def bool_param(description: str, default: Optional[bool] = None) -> Dict[str, Any]:
    """Create a boolean parameter schema."""
    schema = {"type": "boolean", "description": description}
    if default is not None:
        schema["default"] = default
    return schema


def array_param(description: str, item_type: str = "string") -> Dict[str, Any]:
    """Create an array parameter schema (a repeatable flag)."""
    return {
        "type": "array",
        "description": description,
        "items": {"type": item_type}
    }


def make_schema(
    properties: Dict[str, Dict[str, Any]],
    required: Optional[List[str]] = None
) -> Dict[str, Any]:
    """
    Create a complete input schema.

    Args:
        properties: Dict mapping flag names to their schemas
        required: Flags that must be given

    Returns:
        Complete JSON Schema object
    """
    return {
        "type": "object",
        "properties": properties,
        "required": required or []
    }


# =============================================================================
# COMMAND REGISTRY
# =============================================================================

# Global registry of commands
_registered_commands: Dict[str, Tuple[Callable, CommandSpec]] = {}


def register_command(name: str, func: Callable, spec: CommandSpec) -> None:
    """
    Register a command (for bound methods of the command classes).

    Args:
        name: The command name
        func: Callable taking (config, context)
        spec: The command specification
    """
    _registered_commands[name] = (func, spec)


def get_registered_commands() -> Dict[str, Tuple[Callable, CommandSpec]]:
    """
    Get all registered commands.

    Returns:
        Dictionary mapping command names to (function, spec) tuples
    """
    return _registered_commands.copy()


def get_command_func(name: str) -> Optional[Callable]:
    """
    Get just the function for a command.

    Args:
        name: The command name

    Returns:
        The callable or None if not found
    """
    result = _registered_commands.get(name)
    return result[0] if result else None


def list_command_names() -> List[str]:
    """List all registered command names, sorted."""
    return sorted(_registered_commands)
