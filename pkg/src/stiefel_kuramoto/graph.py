"""Weighted undirected interaction graphs with 0-based node ids."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import ConfigError, InvalidSize, NodeOutOfRange


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph on nodes ``0..n_nodes-1``.

    ``edges`` is normalised to a sorted tuple of ``(i, j, weight)`` with ``i < j``.
    Both the edge list and a per-node neighbour map are kept, since the
    potential sums over edges while the agent dynamics sum over neighbours.
    """

    n_nodes: int
    edges: tuple[tuple[int, int, float], ...] = ()
    _nbrs: tuple[tuple[tuple[int, float], ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_nodes < 1:
            raise InvalidSize(f"graph needs at least one node, got {self.n_nodes}")
        seen = {}
        for e in self.edges:
            i, j, w = int(e[0]), int(e[1]), float(e[2])
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            for k in (i, j):
                if not 0 <= k < self.n_nodes:
                    raise NodeOutOfRange(f"node {k} outside 0..{self.n_nodes - 1}")
            if not (w > 0 and np.isfinite(w)):
                raise ValueError(f"edge {{{i},{j}}} has non-positive weight {w}")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"duplicate edge {{{i},{j}}}")
            seen[key] = w
        edges = tuple(sorted((i, j, w) for (i, j), w in seen.items()))
        object.__setattr__(self, "edges", edges)
        nbrs: list[list[tuple[int, float]]] = [[] for _ in range(self.n_nodes)]
        for i, j, w in edges:
            nbrs[i].append((j, w))
            nbrs[j].append((i, w))
        object.__setattr__(self, "_nbrs", tuple(tuple(sorted(x)) for x in nbrs))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def weight(self, i: int, j: int) -> float:
        """a_ij, or 0.0 when {i, j} is not an edge."""
        for k, w in self.neighbors(i):
            if k == j:
                return w
        return 0.0

    def neighbors(self, i: int) -> list[tuple[int, float]]:
        if not 0 <= i < self.n_nodes:
            raise NodeOutOfRange(f"node {i} outside 0..{self.n_nodes - 1}")
        return list(self._nbrs[i])

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.n_nodes, self.n_nodes))
        for i, j, w in self.edges:
            A[i, j] = A[j, i] = w
        return A

    def max_weight(self) -> float:
        return max((w for _, _, w in self.edges), default=0.0)

    def to_json(self) -> dict[str, Any]:
        return {"n_nodes": self.n_nodes, "edges": [[i, j, w] for i, j, w in self.edges]}


def cycle_graph(N: int, weight: float = 1.0) -> WeightedGraph:
    """The ring H_N: edges {i, i+1 mod N}."""
    if N < 3:
        raise InvalidSize(f"cycle graph needs N >= 3, got {N}")
    if not weight > 0:
        raise ValueError(f"weight must be positive, got {weight}")
    return WeightedGraph(N, tuple((i, (i + 1) % N, weight) for i in range(N)))


def complete_graph(N: int, weight: float = 1.0) -> WeightedGraph:
    if N < 2:
        raise InvalidSize(f"complete graph needs N >= 2, got {N}")
    if not weight > 0:
        raise ValueError(f"weight must be positive, got {weight}")
    return WeightedGraph(N, tuple((i, j, weight) for i in range(N) for j in range(i + 1, N)))


def is_connected(g: WeightedGraph) -> bool:
    """Breadth-first search from node 0."""
    seen = {0}
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for j, _ in g.neighbors(i):
            if j not in seen:
                seen.add(j)
                queue.append(j)
    return len(seen) == g.n_nodes


def neighbors(g: WeightedGraph, i: int) -> list[tuple[int, float]]:
    return g.neighbors(i)


def graph_from_json(obj: dict[str, Any]) -> WeightedGraph:
    """Parse either the explicit ``{"n_nodes", "edges"}`` form or a
    ``{"family", "n_nodes", "weight"}`` family description."""
    if not isinstance(obj, dict):
        raise ConfigError("graph must be a JSON object", "graph")
    try:
        if "family" in obj:
            extra = set(obj) - {"family", "n_nodes", "weight"}
            if extra:
                raise ConfigError(f"unknown fields {sorted(extra)}", "graph")
            family = obj["family"]
            N = int(obj["n_nodes"])
            w = float(obj.get("weight", 1.0))
            if family == "cycle":
                return cycle_graph(N, w)
            if family == "complete":
                return complete_graph(N, w)
            raise ConfigError(f"unknown family {family!r}", "graph.family")
        extra = set(obj) - {"n_nodes", "edges"}
        if extra:
            raise ConfigError(f"unknown fields {sorted(extra)}", "graph")
        edges = tuple((int(i), int(j), float(w)) for i, j, w in obj.get("edges", []))
        return WeightedGraph(int(obj["n_nodes"]), edges)
    except ConfigError:
        raise
    except KeyError as exc:
        raise ConfigError("missing field", f"graph.{exc.args[0]}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), "graph") from exc
