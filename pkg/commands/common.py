"""
Input loading shared by the command classes: graph and data files, and
the default priors derived from them.
"""

from typing import List, Optional

import numpy as np

from admg.data import Dataset, load_dataset
from admg.gibbs import ModelPriors
from admg.giw import GiwParams
from admg.graph import Admg, load_graph
from core.config import RunConfig
from core.errors import ValidationError


def single_graph(config: RunConfig) -> Admg:
    if len(config.graph) != 1:
        raise ValidationError(f"'{config.command}' takes exactly one --graph, got {len(config.graph)}")
    return load_graph(config.graph[0])


def candidate_graphs(config: RunConfig) -> List[Admg]:
    if not config.graph:
        raise ValidationError("no candidate graphs given")
    return [load_graph(path) for path in config.graph]


def required_data(path: Optional[str], flag: str, graph: Admg) -> Dataset:
    if not path:
        raise ValidationError(f"--{flag} is required")
    return load_dataset(path).bind(graph)


def u_scale(config: RunConfig, dataset: Optional[Dataset]) -> float:
    """--u-scale, else the mean per-column data variance, else 1."""
    if config.u_scale is not None:
        return config.u_scale
    if dataset is None or dataset.d < 2:
        return 1.0
    scale = float(np.mean(dataset.values.var(axis=0, ddof=1)))
    return scale if scale > 0 else 1.0


def giw_prior(graph: Admg, config: RunConfig, dataset: Optional[Dataset] = None) -> GiwParams:
    scale = u_scale(config, dataset)
    return GiwParams(delta=config.delta, U=scale * np.eye(graph.q), graph=graph)


def model_priors(graph: Admg, config: RunConfig, dataset: Dataset) -> ModelPriors:
    return ModelPriors.default(
        graph,
        delta=config.delta,
        u_scale=u_scale(config, dataset),
        b_mean=config.b_mean,
        b_variance=config.b_variance,
        intercepts=config.intercepts,
    )


def check_burnin(config: RunConfig) -> None:
    """Samplers need at least one sweep past burn-in."""
    if config.iterations > 0 and config.burnin >= config.iterations:
        raise ValidationError(
            f"burn-in ({config.burnin}) must be smaller than iterations ({config.iterations})"
        )


def support_columns(graph: Admg) -> List[str]:
    """Column names of the free covariance entries: diagonal, then bi-directed pairs."""
    names = [f"sigma[{n},{n}]" for n in graph.nodes]
    names += [f"sigma[{a},{b}]" for a, b in graph.sorted_bidirected_edges()]
    return names


def support_values(graph: Admg, sigma: np.ndarray) -> List[float]:
    values = [float(sigma[i, i]) for i in range(graph.q)]
    values += [
        float(sigma[graph.index(a), graph.index(b)]) for a, b in graph.sorted_bidirected_edges()
    ]
    return values
