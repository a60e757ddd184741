"""
Synthetic models and structural-equation simulation.

Contains:
- bow_model, hub_graph, industrialization_model, recovery_model: fixed test models
- random_admg, random_theta: seeded random models
- simulate: draw observed data from (graph, Theta)
"""

from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.linalg import cholesky, solve

from admg.bartlett import Theta
from admg.data import Dataset
from admg.gibbs import latent_scale_edges
from admg.graph import Admg
from core.errors import ValidationError

Model = Tuple[Admg, Theta]


def _theta_from_maps(
    graph: Admg,
    coefficients: Dict[Tuple[str, str], float],
    variances: Dict[str, float],
    covariances: Dict[Tuple[str, str], float],
    intercepts: Optional[Dict[str, float]] = None,
) -> Theta:
    q = graph.q
    B = np.zeros((q, q))
    for (parent, child), value in coefficients.items():
        B[graph.index(child), graph.index(parent)] = value
    V = np.diag([variances[n] for n in graph.nodes]).astype(float)
    for (a, b), value in covariances.items():
        i, j = graph.index(a), graph.index(b)
        V[i, j] = V[j, i] = value
    mean = np.zeros(q)
    for name, value in (intercepts or {}).items():
        mean[graph.index(name)] = value
    theta = Theta(B=B, V=V, mean=mean)
    theta.check(graph)
    return theta


def bow_model(b: float = 0.5, v23: float = 0.4) -> Model:
    """Y2 -> Y3 together with Y2 <-> Y3."""
    graph = Admg.from_edges(["Y2", "Y3"], directed=[("Y2", "Y3")], bidirected=[("Y2", "Y3")])
    theta = _theta_from_maps(
        graph, {("Y2", "Y3"): b}, {"Y2": 1.0, "Y3": 1.0}, {("Y2", "Y3"): v23}
    )
    return graph, theta


def hub_graph(q: int) -> Admg:
    """Covariance graph with H bi-directed-adjacent to Y1..Y(q-1), declared first."""
    if q < 2:
        raise ValidationError(f"hub graph needs at least 2 nodes, got {q}")
    leaves = [f"Y{k}" for k in range(1, q)]
    return Admg.from_edges(["H"] + leaves, bidirected=[("H", leaf) for leaf in leaves])


def industrialization_model() -> Model:
    """
    Three latent factors measured by eleven indicators.

    X1 (three I indicators) drives X2 and X3; X2 and X3 each load on four
    D indicators, with correlated errors between matching D indicators.
    """
    indicators = [f"I{k}" for k in range(1, 4)] + [f"D{k}" for k in range(1, 9)]
    latents = ["X1", "X2", "X3"]
    loadings = {
        ("X1", "I1"): 1.0, ("X1", "I2"): 1.4, ("X1", "I3"): 1.2,
        ("X2", "D1"): 1.0, ("X2", "D2"): 1.2, ("X2", "D3"): 1.1, ("X2", "D4"): 1.3,
        ("X3", "D5"): 1.0, ("X3", "D6"): 1.1, ("X3", "D7"): 1.2, ("X3", "D8"): 1.2,
        ("X1", "X2"): 1.5, ("X1", "X3"): 0.6, ("X2", "X3"): 0.8,
    }
    pairs = {
        ("D1", "D5"): 0.6, ("D2", "D4"): 0.8, ("D2", "D6"): 1.0,
        ("D3", "D7"): 0.5, ("D4", "D8"): 0.3, ("D6", "D8"): 1.0,
    }
    graph = Admg.from_edges(
        indicators + latents, directed=list(loadings), bidirected=list(pairs), latent=latents
    )
    variances = {n: 0.5 for n in indicators}
    variances.update({"D1": 1.8, "D2": 7.0, "D3": 5.0, "D4": 3.0,
                      "D5": 2.0, "D6": 5.0, "D7": 3.5, "D8": 3.0})
    variances.update({"X1": 0.45, "X2": 3.9, "X3": 0.2})
    return graph, _theta_from_maps(graph, loadings, variances, pairs)


def recovery_model() -> Model:
    """Five observed nodes, three directed and two bi-directed edges."""
    nodes = ["Y1", "Y2", "Y3", "Y4", "Y5"]
    coefficients = {("Y1", "Y2"): 0.8, ("Y2", "Y4"): -0.6, ("Y3", "Y5"): 0.5}
    pairs = {("Y1", "Y3"): 0.4, ("Y4", "Y5"): -0.3}
    graph = Admg.from_edges(nodes, directed=list(coefficients), bidirected=list(pairs))
    variances = {"Y1": 1.0, "Y2": 0.7, "Y3": 1.2, "Y4": 0.9, "Y5": 0.8}
    return graph, _theta_from_maps(graph, coefficients, variances, pairs)


def random_admg(
    q: int,
    rng: np.random.Generator,
    edge_probability: float = 0.4,
    directed_fraction: float = 0.5,
    allow_bows: bool = False,
) -> Admg:
    """
    Nodes Y1..Yq. Each pair gets an edge with ``edge_probability``; an edge
    is directed (earlier -> later, so the graph is acyclic) with probability
    ``directed_fraction`` and bi-directed otherwise. ``allow_bows`` adds a
    bi-directed edge next to a directed one with the same probability.
    """
    if q < 1:
        raise ValidationError(f"graph needs at least one node, got {q}")
    nodes = [f"Y{k}" for k in range(1, q + 1)]
    directed: List[Tuple[str, str]] = []
    bidirected: List[Tuple[str, str]] = []
    for i in range(q):
        for j in range(i + 1, q):
            if rng.random() >= edge_probability:
                continue
            if rng.random() < directed_fraction:
                directed.append((nodes[i], nodes[j]))
                if allow_bows and rng.random() < edge_probability:
                    bidirected.append((nodes[i], nodes[j]))
            else:
                bidirected.append((nodes[i], nodes[j]))
    return Admg.from_edges(nodes, directed=directed, bidirected=bidirected)


def random_theta(
    graph: Admg,
    rng: np.random.Generator,
    coefficient_range: Tuple[float, float] = (0.3, 0.9),
    correlation: float = 0.5,
) -> Theta:
    """
    Coefficients of random sign with magnitude in ``coefficient_range``, V
    diagonally dominant in M+(G). Each latent's first loading is 1.0.
    """
    q = graph.q
    B = np.zeros((q, q))
    low, high = coefficient_range
    for parent, child in graph.sorted_directed_edges():
        B[graph.index(child), graph.index(parent)] = rng.choice([-1.0, 1.0]) * rng.uniform(low, high)
    for (parent, child), value in latent_scale_edges(graph).items():
        B[graph.index(child), graph.index(parent)] = value

    V = np.zeros((q, q))
    for a, b in graph.sorted_bidirected_edges():
        i, j = graph.index(a), graph.index(b)
        V[i, j] = V[j, i] = rng.uniform(-correlation, correlation)
    np.fill_diagonal(V, 0.5 + rng.uniform(0.0, 0.5, q) + np.abs(V).sum(axis=1))
    return Theta(B=B, V=V)


def simulate(graph: Admg, theta: Theta, d: int, rng: np.random.Generator) -> Dataset:
    """d draws of y = (I - B)^-1 (mean + e), e ~ N(0, V); latent columns dropped."""
    if d < 0:
        raise ValidationError(f"sample count must be >= 0, got {d}")
    theta.check(graph)
    q = graph.q
    errors = rng.standard_normal((d, q)) @ cholesky(theta.V, lower=True).T
    values = solve(np.eye(q) - theta.B, (errors + theta.mean).T).T
    observed = [graph.index(n) for n in graph.observed]
    return Dataset(values[:, observed], graph.observed)
