"""
Run context for admg-bayes.

Contains:
- RunContext: output directory of one run, the files written so far, and
  the manifest that lets the run be replayed
"""

import json
import os
import platform
import uuid
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import networkx
import numpy
import pandas as pd
import psutil
import scipy

from admg.data import write_frame
from core.config import RunConfig
from core.constants import OUTPUT_FILES, __version__
from core.errors import ValidationError


def new_run_id() -> str:
    return str(uuid.uuid4())[:8]


def environment_versions() -> Dict[str, str]:
    """Versions recorded in the manifest."""
    return {
        "admg-bayes": __version__,
        "python": platform.python_version(),
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
        "networkx": networkx.__version__,
        "psutil": psutil.__version__,
    }


@dataclass
class RunContext:
    """
    Where one run writes and what it has written.

    Every primary output goes through write_frame / write_json / write_text
    so the manifest lists it. Names are OUTPUT_FILES entries, optionally
    prefixed by an engine name ("vb_trace.csv").
    """

    config: RunConfig
    out_dir: str
    run_id: str = field(default_factory=new_run_id)
    outputs: List[str] = field(default_factory=list)

    def prepare(self) -> None:
        os.makedirs(self.out_dir, exist_ok=True)

    def path(self, key: str, prefix: Optional[str] = None) -> str:
        name = OUTPUT_FILES[key]
        if prefix:
            name = f"{prefix.replace('-', '_')}_{name}"
        return os.path.join(self.out_dir, name)

    def _record(self, path: str) -> str:
        name = os.path.basename(path)
        if name not in self.outputs:
            self.outputs.append(name)
        return path

    def write_frame(self, key: str, frame: pd.DataFrame, prefix: Optional[str] = None) -> str:
        path = self.path(key, prefix)
        write_frame(frame, path)
        return self._record(path)

    def write_json(self, key: str, payload: Dict[str, Any], prefix: Optional[str] = None) -> str:
        path = self.path(key, prefix)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")
        return self._record(path)

    def write_text(self, key: str, text: str, prefix: Optional[str] = None) -> str:
        path = self.path(key, prefix)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        return self._record(path)

    def write_manifest(self) -> str:
        """Config echo, seed, versions and the list of outputs (no timestamps)."""
        payload = {
            "config": self.config.to_manifest(),
            "seed": self.config.seed,
            "versions": environment_versions(),
            "platform": platform.platform(),
            "outputs": list(self.outputs),
        }
        return self.write_json("manifest", payload)


def load_manifest(path: str) -> RunConfig:
    """The RunConfig recorded in a manifest file."""
    try:
        with open(path, encoding="utf-8") as f:
            payload = json.load(f)
    except json.JSONDecodeError as e:
        raise ValidationError(f"manifest '{path}' is not valid JSON: {e}") from None
    if not isinstance(payload, dict) or "config" not in payload:
        raise ValidationError(f"manifest '{path}' has no config section")
    return RunConfig.from_manifest(payload["config"])
