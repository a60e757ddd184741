"""
Commands package for admg-bayes.

Contains:
- GiwCommands: sample-giw, normconst, score
- FitCommands: fit, predict
- BenchmarkCommands: benchmark
- command_specs: flag schemas and registration
"""

from commands.benchmark_commands import BenchmarkCommands
from commands.fit_commands import FitCommands
from commands.giw_commands import GiwCommands

__all__ = ["BenchmarkCommands", "FitCommands", "GiwCommands"]
