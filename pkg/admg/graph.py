"""
Acyclic directed mixed graphs (ADMGs).

Contains:
- Admg: immutable graph with directed edges, bi-directed edges and latent markers
- SamplingOrder / OrderPlan: a node permutation and the index sets it induces
- parse_graph / render_graph: the line-oriented text format
- spouse_partition, districts, inversion_events, choose_order: the structural
  queries every sampler is driven by
"""

import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from core.errors import GraphError, GraphParseError

_NAME = r"[A-Za-z_][A-Za-z0-9_]*"
_IDENTIFIER = re.compile(rf"{_NAME}\Z")
_NODE_STATEMENT = re.compile(rf"node\s+({_NAME})(?:\s+(latent))?\Z")
_EDGE_STATEMENT = re.compile(rf"({_NAME})\s*(<->|->)\s*({_NAME})\Z")


@dataclass(frozen=True)
class Admg:
    """
    Acyclic directed mixed graph.

    Attributes:
        nodes: Node names in declaration order (this order indexes every matrix)
        directed_edges: (parent, child) pairs
        bidirected_edges: Unordered pairs, stored with the earlier-declared node first
        latent: Names of nodes with no data column
    """

    nodes: Tuple[str, ...]
    directed_edges: FrozenSet[Tuple[str, str]] = frozenset()
    bidirected_edges: FrozenSet[Tuple[str, str]] = frozenset()
    latent: FrozenSet[str] = frozenset()
    directed: nx.DiGraph = field(init=False, repr=False, compare=False)
    bidirected: nx.Graph = field(init=False, repr=False, compare=False)
    _index: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        nodes = tuple(self.nodes)
        index = {name: i for i, name in enumerate(nodes)}
        if len(index) != len(nodes):
            raise GraphError("duplicate node names")
        for name in nodes:
            if not _IDENTIFIER.match(name):
                raise GraphError(f"invalid node name '{name}'")

        def check(a: str, b: str, kind: str) -> None:
            for endpoint in (a, b):
                if endpoint not in index:
                    raise GraphError(f"{kind} edge uses undeclared node '{endpoint}'")
            if a == b:
                raise GraphError(f"self-loop on '{a}'")

        directed = nx.DiGraph()
        directed.add_nodes_from(nodes)
        for parent, child in self.directed_edges:
            check(parent, child, "directed")
            directed.add_edge(parent, child)

        bidirected = nx.Graph()
        bidirected.add_nodes_from(nodes)
        pairs = set()
        for a, b in self.bidirected_edges:
            check(a, b, "bi-directed")
            pairs.add((a, b) if index[a] < index[b] else (b, a))
            bidirected.add_edge(a, b)

        if not nx.is_directed_acyclic_graph(directed):
            cycle = [u for u, _ in nx.find_cycle(directed)]
            raise GraphError(f"directed cycle {' -> '.join(cycle + cycle[:1])}")

        unknown = set(self.latent) - set(index)
        if unknown:
            raise GraphError(f"latent marker on undeclared node(s) {sorted(unknown)}")

        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "directed_edges", frozenset(self.directed_edges))
        object.__setattr__(self, "bidirected_edges", frozenset(pairs))
        object.__setattr__(self, "latent", frozenset(self.latent))
        object.__setattr__(self, "directed", directed)
        object.__setattr__(self, "bidirected", bidirected)
        object.__setattr__(self, "_index", index)

    @classmethod
    def from_edges(
        cls,
        nodes: Sequence[str],
        directed: Iterable[Tuple[str, str]] = (),
        bidirected: Iterable[Tuple[str, str]] = (),
        latent: Iterable[str] = (),
    ) -> "Admg":
        """Build a graph from edge lists, rejecting repeated edges."""
        directed = list(directed)
        bidirected = list(bidirected)
        if len(set(directed)) != len(directed):
            raise GraphError("duplicate directed edge")
        if len({frozenset(p) for p in bidirected}) != len(bidirected):
            raise GraphError("duplicate bi-directed edge")
        return cls(
            nodes=tuple(nodes),
            directed_edges=frozenset(directed),
            bidirected_edges=frozenset(bidirected),
            latent=frozenset(latent),
        )

    # --- Basic queries ---

    @property
    def q(self) -> int:
        return len(self.nodes)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise GraphError(f"unknown node '{name}'") from None

    def _sorted(self, names: Iterable[str]) -> Tuple[str, ...]:
        return tuple(sorted(names, key=self._index.__getitem__))

    @property
    def observed(self) -> Tuple[str, ...]:
        return tuple(n for n in self.nodes if n not in self.latent)

    @property
    def latent_nodes(self) -> Tuple[str, ...]:
        return tuple(n for n in self.nodes if n in self.latent)

    def parents(self, name: str) -> Tuple[str, ...]:
        return self._sorted(self.directed.predecessors(name))

    def children(self, name: str) -> Tuple[str, ...]:
        return self._sorted(self.directed.successors(name))

    def spouses(self, name: str) -> Tuple[str, ...]:
        return self._sorted(self.bidirected.neighbors(name))

    def is_adjacent(self, a: str, b: str) -> bool:
        """True if a and b share a bi-directed edge."""
        return self.bidirected.has_edge(a, b)

    @property
    def is_covariance_graph(self) -> bool:
        """True when the graph has no directed edges."""
        return not self.directed_edges

    def topological_order(self) -> Tuple[str, ...]:
        return tuple(nx.lexicographical_topological_sort(self.directed, key=self._index.__getitem__))

    def sorted_directed_edges(self) -> List[Tuple[str, str]]:
        """Directed edges ordered by (child, parent) declaration index."""
        return sorted(self.directed_edges, key=lambda e: (self._index[e[1]], self._index[e[0]]))

    def sorted_bidirected_edges(self) -> List[Tuple[str, str]]:
        return sorted(self.bidirected_edges, key=lambda e: (self._index[e[0]], self._index[e[1]]))

    def bidirected_mask(self) -> np.ndarray:
        """Boolean q x q support of V: diagonal plus bi-directed pairs."""
        mask = np.eye(self.q, dtype=bool)
        for a, b in self.bidirected_edges:
            i, j = self._index[a], self._index[b]
            mask[i, j] = mask[j, i] = True
        return mask

    def directed_mask(self) -> np.ndarray:
        """Boolean q x q support of B, entry [child, parent]."""
        mask = np.zeros((self.q, self.q), dtype=bool)
        for parent, child in self.directed_edges:
            mask[self._index[child], self._index[parent]] = True
        return mask


@dataclass(frozen=True)
class SamplingOrder:
    """A permutation of the graph's nodes."""

    nodes: Tuple[str, ...]

    @classmethod
    def declaration(cls, graph: Admg) -> "SamplingOrder":
        return cls(tuple(graph.nodes))

    def check(self, graph: Admg) -> None:
        if len(self.nodes) != graph.q or set(self.nodes) != set(graph.nodes):
            raise GraphError(
                f"sampling order {list(self.nodes)} is not a permutation of {list(graph.nodes)}"
            )


@dataclass(frozen=True, eq=False)
class OrderPlan:
    """
    Index sets a sampling order induces, in position space.

    Attributes:
        order: The order this plan was built from
        perm: Graph index of the node at each position
        spouses: Positions of sp<(i) for each position i
        non_spouses: Positions of nsp<(i) for each position i
        later_spouse_counts: #sp>(i), spouses placed after i
    """

    order: SamplingOrder
    perm: np.ndarray
    spouses: Tuple[np.ndarray, ...]
    non_spouses: Tuple[np.ndarray, ...]
    later_spouse_counts: np.ndarray

    @property
    def q(self) -> int:
        return len(self.perm)

    @property
    def inversion_positions(self) -> Tuple[int, ...]:
        return tuple(i for i in range(self.q) if self.spouses[i].size)

    @property
    def inversion_cost(self) -> int:
        return int(sum(i**3 for i in self.inversion_positions))


@lru_cache(maxsize=512)
def plan_order(graph: Admg, order: SamplingOrder) -> OrderPlan:
    """Build (and cache) the position-space index sets for an order."""
    order.check(graph)
    perm = np.array([graph.index(n) for n in order.nodes], dtype=int)
    mask = graph.bidirected_mask()[np.ix_(perm, perm)]
    q = graph.q
    spouses, non_spouses = [], []
    later = np.zeros(q, dtype=int)
    for i in range(q):
        before = np.arange(i)
        adjacent = mask[i, :i]
        spouses.append(before[adjacent])
        non_spouses.append(before[~adjacent])
        later[i] = int(mask[i, i + 1:].sum())
    return OrderPlan(
        order=order,
        perm=perm,
        spouses=tuple(spouses),
        non_spouses=tuple(non_spouses),
        later_spouse_counts=later,
    )


# =============================================================================
# STRUCTURAL QUERIES
# =============================================================================

def spouse_partition(
    graph: Admg, order: SamplingOrder, i: int
) -> Tuple[Tuple[str, ...], Tuple[str, ...]]:
    """
    Split the predecessors of position ``i`` into spouses and non-spouses.

    Args:
        graph: The graph
        order: Sampling order
        i: 0-based position in the order

    Returns:
        (sp<(i), nsp<(i)) as node names in order sequence
    """
    if not 0 <= i < graph.q:
        raise GraphError(f"position {i} out of range for {graph.q} nodes")
    plan = plan_order(graph, order)
    names = order.nodes
    return (
        tuple(names[p] for p in plan.spouses[i]),
        tuple(names[p] for p in plan.non_spouses[i]),
    )


def districts(graph: Admg) -> List[Tuple[str, ...]]:
    """Connected components of the bi-directed part, in declaration order."""
    blocks = [graph._sorted(c) for c in nx.connected_components(graph.bidirected)]
    return sorted(blocks, key=lambda block: graph.index(block[0]))


def inversion_events(graph: Admg, order: SamplingOrder) -> List[Tuple[str, int]]:
    """
    Predecessor-block factorizations a G-IW draw performs under ``order``.

    A node needs one (of size = its position) exactly when it has a spouse
    among its predecessors.
    """
    plan = plan_order(graph, order)
    return [(order.nodes[i], i) for i in plan.inversion_positions]


def _greedy_order(graph: Admg) -> SamplingOrder:
    mask = graph.bidirected_mask()
    np.fill_diagonal(mask, False)
    remaining = list(range(graph.q))
    placed = np.zeros(graph.q, dtype=bool)
    chosen: List[int] = []
    while remaining:
        position = len(chosen)

        def key(node: int) -> Tuple[int, int, int]:
            cost = position**3 if (mask[node] & placed).any() else 0
            pending = int((mask[node] & ~placed).sum())
            return cost, pending, node

        best = min(remaining, key=key)
        remaining.remove(best)
        placed[best] = True
        chosen.append(best)
    return SamplingOrder(tuple(graph.nodes[i] for i in chosen))


def choose_order(
    graph: Admg, strategy: str = "greedy", given: Optional[Sequence[str]] = None
) -> SamplingOrder:
    """
    Pick the node order used by the G-IW sampler.

    Args:
        graph: The graph
        strategy: "given" keeps ``given`` (or the declaration order);
            "greedy" minimises the summed cube of inversion sizes
        given: Optional user order for the "given" strategy

    Returns:
        A sampling order; the greedy result is never costlier than declaration order
    """
    if strategy == "given":
        order = SamplingOrder(tuple(given)) if given else SamplingOrder.declaration(graph)
        order.check(graph)
        return order
    if strategy != "greedy":
        raise GraphError(f"unknown order strategy '{strategy}'")

    greedy = _greedy_order(graph)
    declared = SamplingOrder.declaration(graph)
    if plan_order(graph, declared).inversion_cost <= plan_order(graph, greedy).inversion_cost:
        return declared
    return greedy


# =============================================================================
# TEXT FORMAT
# =============================================================================

def _statements(text: str) -> List[Tuple[int, str]]:
    statements = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        for part in body.split(";"):
            part = part.strip()
            if part:
                statements.append((lineno, part))
    return statements


def parse_graph(text: str, nodes: Optional[Sequence[str]] = None) -> Admg:
    """
    Parse the graph text format.

    Statements are separated by newlines or ';'. ``node <name> [latent]``
    declares a node; ``a -> b`` and ``a <-> b`` add edges; '#' starts a
    comment. When neither ``nodes`` nor any node statement is given, nodes
    are declared implicitly in order of first appearance.

    Raises:
        GraphParseError: syntax, undeclared, duplicate, self-loop or cycle,
            each with the line number of the offending statement
    """
    statements = _statements(text)
    declared: List[str] = list(nodes or [])
    latent: List[str] = []
    edges: List[Tuple[int, str, str, str]] = []

    for lineno, statement in statements:
        node_match = _NODE_STATEMENT.match(statement)
        edge_match = _EDGE_STATEMENT.match(statement)
        if node_match:
            name = node_match.group(1)
            if name in declared:
                raise GraphParseError("duplicate", f"node '{name}' declared twice", lineno)
            declared.append(name)
            if node_match.group(2):
                latent.append(name)
        elif edge_match:
            edges.append((lineno, edge_match.group(1), edge_match.group(2), edge_match.group(3)))
        else:
            raise GraphParseError("syntax", f"cannot parse '{statement}'", lineno)

    implicit = nodes is None and not declared
    directed = nx.DiGraph()
    directed.add_nodes_from(declared)
    bidirected = set()

    for lineno, a, arrow, b in edges:
        for endpoint in (a, b):
            if endpoint not in directed:
                if not implicit:
                    raise GraphParseError("undeclared", f"node '{endpoint}' is not declared", lineno)
                declared.append(endpoint)
                directed.add_node(endpoint)
        if a == b:
            raise GraphParseError("self-loop", f"edge from '{a}' to itself", lineno)
        if arrow == "->":
            if directed.has_edge(a, b):
                raise GraphParseError("duplicate", f"edge {a} -> {b} repeated", lineno)
            if nx.has_path(directed, b, a):
                raise GraphParseError("cycle", f"edge {a} -> {b} closes a directed cycle", lineno)
            directed.add_edge(a, b)
        else:
            pair = frozenset((a, b))
            if pair in bidirected:
                raise GraphParseError("duplicate", f"edge {a} <-> {b} repeated", lineno)
            bidirected.add(pair)

    return Admg(
        nodes=tuple(declared),
        directed_edges=frozenset(directed.edges()),
        bidirected_edges=frozenset(tuple(p) for p in bidirected),
        latent=frozenset(latent),
    )


def render_graph(graph: Admg) -> str:
    """Write a graph in the text format read by parse_graph."""
    lines = [f"node {n} latent" if n in graph.latent else f"node {n}" for n in graph.nodes]
    lines += [f"{a} -> {b}" for a, b in graph.sorted_directed_edges()]
    lines += [f"{a} <-> {b}" for a, b in graph.sorted_bidirected_edges()]
    return "\n".join(lines) + "\n"


def load_graph(path: str) -> Admg:
    """Read a graph file."""
    with open(path, "r", encoding="utf-8") as handle:
        return parse_graph(handle.read())
