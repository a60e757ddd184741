"""
Harness - high-level facade for admg-bayes.

Loads .env defaults, configures logging, and wires the CommandRegistry
(body) to the Router. execute() turns an argv list into an exit code.
"""

import logging
import os
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from core.config import RunConfig
from core.constants import (
    DEFAULT_LOG_LEVEL,
    DEFAULT_OUTPUT_DIR,
    ENV_DEFAULT_M,
    ENV_LOG_LEVEL,
    ENV_OUTPUT_DIR,
    ENV_POOL_M,
    EXIT_SUCCESS,
    EXIT_VALIDATION,
)
from core.parser_builder import build_parser
from core.registry import CommandRegistry
from core.router import Router

# Load environment variables
load_dotenv()


def configure_logging(level_name: str) -> None:
    level = getattr(logging, level_name.upper(), None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _env_int(name: str) -> Optional[int]:
    raw = os.environ.get(name)
    if raw is None or not raw.strip():
        return None
    try:
        return int(raw)
    except ValueError:
        logging.getLogger(__name__).warning("Ignoring non-integer %s=%r", name, raw)
        return None


class Harness:
    """
    Wires up all components and provides a simple execute() interface.
    """

    def __init__(self):
        """Read environment defaults and build the body and router."""
        configure_logging(os.environ.get(ENV_LOG_LEVEL, DEFAULT_LOG_LEVEL))
        self.output_root = os.environ.get(ENV_OUTPUT_DIR, DEFAULT_OUTPUT_DIR)
        self.env_defaults = {
            "m": _env_int(ENV_DEFAULT_M),
            "pool_m": _env_int(ENV_POOL_M),
        }
        self.body = CommandRegistry()
        self.router = Router(self.body, output_root=self.output_root)
        self.parser = build_parser()

    def parse(self, argv: List[str]) -> RunConfig:
        """
        argv -> RunConfig. Flags win over environment defaults, which win
        over the RunConfig defaults.
        """
        namespace = vars(self.parser.parse_args(argv))
        options = {k: v for k, v in self.env_defaults.items() if v is not None}
        options.update({k: v for k, v in namespace.items() if v is not None})
        return RunConfig.from_options(namespace["command"], options)

    def run(self, argv: List[str]) -> Dict[str, Any]:
        """Parse and dispatch without printing; returns the router's status dict."""
        try:
            config = self.parse(argv)
        except SystemExit as e:
            code = e.code if isinstance(e.code, int) else EXIT_VALIDATION
            status = "success" if code == EXIT_SUCCESS else "error"
            return {"status": status, "action": "parse", "message": "argument parsing",
                    "exit_code": code, "outputs": []}
        return self.router.process(config)

    def execute(self, argv: List[str]) -> int:
        """
        Run a command line and report it.

        Args:
            argv: Arguments after the program name

        Returns:
            Process exit code
        """
        print(f"[RUN] {' '.join(argv)}")
        result = self.run(argv)
        if result.get("action") == "parse":
            return result["exit_code"]

        status_icon = "[OK]" if result.get("status") == "success" else "[ERR]"
        print(f"{status_icon} {result.get('action')}: {result.get('message')}")
        for path in result.get("outputs", []):
            print(f"  -> {path}")
        return result["exit_code"]
