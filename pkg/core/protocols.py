"""
Protocol definitions for admg-bayes.

These protocols define the contracts between components, enabling:
- Swappable inference engines (Gibbs, variational, DAG baseline)
- Easy mocking of the command layer in router tests

Depend on abstractions, not concretions.
"""

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Callable, Dict, List, Optional, Protocol

if TYPE_CHECKING:
    import pandas as pd

    from admg.data import Dataset
    from admg.gibbs import ModelPriors, PosteriorSamples
    from admg.graph import Admg
    from core.config import RunConfig


@dataclass
class FitResult:
    """
    What an engine hands back after fitting.

    Attributes:
        engine: Engine name
        samples: Posterior draws on the fitted ADMG (offset set when data were centred)
        trace: One row per retained draw, one column per named parameter
        summary: Mean, std, central interval and ESS per parameter
        bound: Variational bound per sweep (empty for samplers)
        predictive_method: How predictive densities are formed
        diagnostics: Timing, factorization counts, re-anchoring sweeps, ...
    """

    engine: str
    samples: "PosteriorSamples"
    trace: "pd.DataFrame"
    summary: "pd.DataFrame"
    bound: List[float] = field(default_factory=list)
    predictive_method: str = "posterior draws"
    diagnostics: Dict[str, Any] = field(default_factory=dict)


class InferenceEngine(Protocol):
    """
    Abstraction for any posterior approximation of a Gaussian ADMG model.

    Implementations fit on training rows and score held-out rows.
    """

    name: str

    def fit(
        self,
        graph: "Admg",
        priors: "ModelPriors",
        dataset: "Dataset",
        config: "RunConfig",
    ) -> FitResult:
        """
        Fit the model.

        Args:
            graph: The ADMG
            priors: Priors on V and B
            dataset: Training rows (uncentred)
            config: Sampler settings and seed

        Returns:
            FitResult with draws, trace and summaries
        """
        ...

    def predictive_loglik(self, result: FitResult, test: "Dataset") -> float:
        """
        Average log predictive density of the test rows.

        Args:
            result: A fit from this engine
            test: Held-out rows (uncentred)

        Returns:
            Mean over rows of the log predictive density
        """
        ...


class CommandExecutor(Protocol):
    """
    The command body - looks up command callables by name.
    """

    def get(self, command_name: str) -> Optional[Callable]:
        """
        Get a command function by name.

        Args:
            command_name: The registered command name

        Returns:
            Callable taking (config, context), or None if not found
        """
        ...

    def list_commands(self) -> List[str]:
        """List all registered command names."""
        ...


class Dispatcher(Protocol):
    """
    The router interface - runs one configured command to a status dict.
    """

    def process(self, config: "RunConfig") -> Dict[str, Any]:
        """
        Run a command.

        Returns:
            Status dict with 'status', 'action', 'message', 'exit_code' and 'outputs'
        """
        ...


__all__ = [
    "CommandExecutor",
    "Dispatcher",
    "FitResult",
    "InferenceEngine",
]
