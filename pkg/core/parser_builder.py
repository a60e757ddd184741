"""
Dynamic argument-parser builder for admg-bayes.

Generates one argparse sub-command per registered CommandSpec from its
JSON Schema flags, so new commands appear on the command line without
parser changes.
"""

import argparse
from typing import Any, Callable, Dict

from core.command_decorator import CommandSpec, get_registered_commands
from core.constants import OUTPUT_FILES, __version__

_TYPES = {"integer": int, "number": float, "string": str}


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _bounded(convert: Callable[[str], Any], minimum: Any = None, maximum: Any = None):
    """argparse type enforcing the schema's minimum and maximum."""
    def parse(text: str):
        value = convert(text)
        if minimum is not None and value < minimum:
            raise argparse.ArgumentTypeError(f"must be at least {minimum}, got {value}")
        if maximum is not None and value > maximum:
            raise argparse.ArgumentTypeError(f"must be at most {maximum}, got {value}")
        return value
    parse.__name__ = convert.__name__
    return parse


def _add_property(parser: argparse.ArgumentParser, name: str, prop: Dict[str, Any], required: bool) -> None:
    """Add one schema property as a flag. Defaults stay None so RunConfig owns them."""
    prop_type = prop.get("type", "string")
    help_text = prop.get("description", "")
    if "default" in prop:
        help_text += f" (default: {prop['default']})"
    kwargs: Dict[str, Any] = {"dest": name, "help": help_text}

    if prop_type == "boolean":
        kwargs["action"] = "store_true"
        kwargs["default"] = None
    elif prop_type == "array":
        kwargs["action"] = "append"
        kwargs["type"] = _TYPES.get(prop.get("items", {}).get("type", "string"), str)
        kwargs["required"] = required
    else:
        kwargs["type"] = _TYPES.get(prop_type, str)
        if "minimum" in prop or "maximum" in prop:
            kwargs["type"] = _bounded(kwargs["type"], prop.get("minimum"), prop.get("maximum"))
        kwargs["required"] = required
        if "enum" in prop:
            kwargs["choices"] = prop["enum"]
    parser.add_argument(_flag(name), **kwargs)


def _add_command(subparsers, spec: CommandSpec) -> None:
    epilog = None
    if spec.outputs:
        epilog = "writes: " + ", ".join(OUTPUT_FILES[key] for key in spec.outputs)
    parser = subparsers.add_parser(
        spec.name, help=spec.description, description=spec.description, epilog=epilog
    )
    schema = spec.input_schema
    required = set(schema.get("required", []))
    for name, prop in schema.get("properties", {}).items():
        _add_property(parser, name, prop, name in required)


def build_parser(prog: str = "admg") -> argparse.ArgumentParser:
    """
    Build the full parser from the registry.

    Returns:
        Parser whose namespace carries "command" plus one attribute per flag
    """
    parser = argparse.ArgumentParser(
        prog=prog, description="Bayesian inference for Gaussian ADMG models"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", metavar="command")
    subparsers.required = True
    for _, (_, spec) in sorted(get_registered_commands().items()):
        _add_command(subparsers, spec)
    return parser


def describe_commands() -> str:
    """One line per command with its flags, for help output and tests."""
    lines = []
    for name, (_, spec) in sorted(get_registered_commands().items()):
        props = spec.input_schema.get("properties", {})
        required = set(spec.input_schema.get("required", []))
        flags = " ".join(
            _flag(p) if p in required else f"[{_flag(p)}]" for p in props
        )
        line = f"- {name}: {flags}".rstrip()
        if spec.returns_description:
            line += f" -> {spec.returns_description}"
        lines.append(line)
    return "\n".join(lines)
