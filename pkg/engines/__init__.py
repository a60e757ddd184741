"""
Inference engines for admg-bayes.

Provides engines that implement the InferenceEngine protocol.
"""

from core.errors import ValidationError
from core.protocols import InferenceEngine
from engines.dag_engine import DagBaselineEngine
from engines.gibbs_engine import GibbsEngine
from engines.vb_engine import VbEngine

ENGINES = {
    GibbsEngine.name: GibbsEngine,
    VbEngine.name: VbEngine,
    DagBaselineEngine.name: DagBaselineEngine,
}


def get_engine(name: str) -> InferenceEngine:
    """Instantiate an engine by its CLI name."""
    try:
        return ENGINES[name]()
    except KeyError:
        raise ValidationError(f"unknown engine '{name}'; choose from {sorted(ENGINES)}") from None


__all__ = [
    "DagBaselineEngine",
    "ENGINES",
    "GibbsEngine",
    "VbEngine",
    "get_engine",
]
