import numpy as np

from stiefel_kuramoto.dynamics import Configuration
from stiefel_kuramoto.graph import WeightedGraph
from stiefel_kuramoto.manifold import haar_array


def random_config(rng, N, n, p) -> Configuration:
    return Configuration(haar_array(rng, n, p, (N,)))


def consensus_config(rng, N, n, p) -> Configuration:
    return Configuration(np.repeat(haar_array(rng, n, p)[None], N, axis=0))


def random_weighted(rng, N, family) -> WeightedGraph:
    """Cycle or complete graph on N nodes with weights drawn from (0, 2)."""
    if family == "cycle" and N >= 3:
        pairs = [(i, (i + 1) % N) for i in range(N)]
    else:
        pairs = [(i, j) for i in range(N) for j in range(i + 1, N)]
    return WeightedGraph(N, tuple((i, j, float(rng.uniform(0.01, 2.0))) for i, j in pairs))
