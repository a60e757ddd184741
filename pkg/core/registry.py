"""
CommandRegistry - the command body for admg-bayes.

Stateless executor that maps command names to functions.
Implements the CommandExecutor protocol.

Commands are registered via the declarative specs in
commands/command_specs.py, not hardcoded here.
"""

from typing import Callable, List, Optional

from commands.benchmark_commands import BenchmarkCommands
from commands.command_specs import register_all_commands
from commands.fit_commands import FitCommands
from commands.giw_commands import GiwCommands
from core.command_decorator import get_command_func, list_command_names


class CommandRegistry:
    """
    Maps command names to bound command methods.

    Implements the CommandExecutor protocol.
    """

    def __init__(self):
        """Create the command classes and register their specs."""
        self.giw = GiwCommands()
        self.fit = FitCommands()
        self.benchmark = BenchmarkCommands()

        register_all_commands(
            giw_commands=self.giw,
            fit_commands=self.fit,
            benchmark_commands=self.benchmark,
        )

    def get(self, command_name: str) -> Optional[Callable]:
        """
        Get a command function by name.

        Args:
            command_name: The registered command name

        Returns:
            Callable taking (config, context), or None if not found
        """
        return get_command_func(command_name)

    def list_commands(self) -> List[str]:
        """List all registered command names."""
        return list_command_names()
