"""
Router - atomic command executor for admg-bayes.

Maps RunConfig -> command -> status dict.
No retries. Fail fast. No exception escapes: every outcome becomes a
status dict carrying the process exit code.
"""

import logging
import os
from typing import Any, Dict, Optional

from core.config import RunConfig
from core.constants import (
    DEFAULT_OUTPUT_DIR,
    EXIT_SUCCESS,
    EXIT_UNEXPECTED,
    EXIT_VALIDATION,
)
from core.context import RunContext, load_manifest, new_run_id
from core.errors import AdmgError
from core.protocols import CommandExecutor

logger = logging.getLogger(__name__)


def error_result(action: str, message: str, exit_code: int) -> Dict[str, Any]:
    return {
        "status": "error",
        "action": action,
        "message": message,
        "exit_code": exit_code,
        "outputs": [],
    }


class Router:
    """
    Runs one command per call.

    Implements the Dispatcher protocol.
    """

    def __init__(self, body: CommandExecutor, output_root: str = DEFAULT_OUTPUT_DIR):
        """
        Initialize the Router.

        Args:
            body: Command executor implementing the CommandExecutor protocol
            output_root: Parent of auto-named run directories when --out is absent
        """
        self.body = body
        self.output_root = output_root
        self.context: Optional[RunContext] = None

    def _context_for(self, config: RunConfig) -> RunContext:
        run_id = new_run_id()
        out_dir = config.out or os.path.join(self.output_root, f"{config.command}-{run_id}")
        return RunContext(config=config.with_out(out_dir), out_dir=out_dir, run_id=run_id)

    def _replay(self, config: RunConfig) -> Dict[str, Any]:
        if not config.manifest:
            return error_result("replay", "replay needs --manifest", EXIT_VALIDATION)
        recorded = load_manifest(config.manifest)
        if recorded.command == "replay":
            return error_result("replay", "a manifest cannot replay a replay", EXIT_VALIDATION)
        target = recorded.with_out(config.out) if config.out else recorded.with_out(None)
        logger.info("Replaying '%s' from %s", recorded.command, config.manifest)
        result = self.process(target)
        result["replayed"] = recorded.command
        return result

    def process(self, config: RunConfig) -> Dict[str, Any]:
        """
        Validate, dispatch and write the manifest.

        Args:
            config: The run configuration

        Returns:
            Status dict with 'status', 'action', 'message', 'exit_code' and 'outputs'
        """
        action = config.command
        try:
            if action == "replay":
                return self._replay(config)

            func = self.body.get(action)
            if not func:
                return error_result(action, f"Command '{action}' not found", EXIT_VALIDATION)
            config.validate()

            self.context = self._context_for(config)
            self.context.prepare()
            result = func(self.context.config, self.context)
            self.context.write_manifest()

            result.setdefault("status", "success")
            result.setdefault("action", action)
            result["exit_code"] = EXIT_SUCCESS
            result["outputs"] = [
                os.path.join(self.context.out_dir, name) for name in self.context.outputs
            ]
            return result

        except AdmgError as e:
            return error_result(action, str(e), e.exit_code)
        except OSError as e:
            return error_result(action, f"I/O error: {e}", EXIT_VALIDATION)
        except Exception as e:
            logger.exception("Unexpected failure in '%s'", action)
            return error_result(action, f"{action} failed: {e}", EXIT_UNEXPECTED)
