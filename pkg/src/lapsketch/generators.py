"""Deterministic graph generators for test corpora and benchmarks."""
from __future__ import annotations

import itertools

import networkx as nx
import numpy as np

from .errors import PreconditionError
from .graph import WeightedGraph
from .rng import generator

KINDS = ("clique", "cycle", "path", "star", "dumbbell", "erdos-renyi",
         "random-regular", "weighted-random", "petersen")


def clique(n: int) -> WeightedGraph:
    return WeightedGraph.from_edges(n, itertools.combinations(range(n), 2))


def cycle(n: int) -> WeightedGraph:
    if n < 3:
        raise PreconditionError("cycle needs n >= 3")
    return WeightedGraph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def path(n: int) -> WeightedGraph:
    return WeightedGraph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def star(leaves: int) -> WeightedGraph:
    """``K_{1,leaves}`` with the hub at vertex 0."""
    return WeightedGraph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def dumbbell(k: int) -> WeightedGraph:
    """Two ``K_k`` on ``0..k-1`` and ``k..2k-1`` joined by the edge ``(k-1, k)``."""
    a = list(itertools.combinations(range(k), 2))
    b = [(x + k, y + k) for x, y in a]
    return WeightedGraph.from_edges(2 * k, a + b + [(k - 1, k)])


def petersen() -> WeightedGraph:
    g = nx.petersen_graph()
    return WeightedGraph.from_edges(10, g.edges())


def erdos_renyi(n: int, p: float, seed: int = 0) -> WeightedGraph:
    if not 0 <= p <= 1:
        raise PreconditionError("edge probability must lie in [0, 1]")
    rng = generator(seed, "gen", "erdos-renyi", n, p)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < p
    return WeightedGraph.from_edges(n, zip(iu[keep].tolist(), ju[keep].tolist()))


def random_regular(n: int, d: int, seed: int = 0) -> WeightedGraph:
    if d >= n or (n * d) % 2:
        raise PreconditionError("random regular graph needs d < n and n*d even")
    g = nx.random_regular_graph(d, n, seed=seed % (2**32))
    return WeightedGraph.from_edges(n, g.edges())


def weighted_random(n: int, p: float, max_weight: int = 16, seed: int = 0) -> WeightedGraph:
    """Erdős–Rényi support with i.i.d. integer weights in ``[1, max_weight]``."""
    rng = generator(seed, "gen", "weighted-random", n, p, max_weight)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < p
    w = rng.integers(1, max_weight + 1, size=int(keep.sum()))
    return WeightedGraph.from_edges(n, zip(iu[keep].tolist(), ju[keep].tolist(), w.tolist()))


def make(kind: str, params: list[float], seed: int = 0) -> WeightedGraph:
    """Dispatch used by ``lapsketch gen``."""
    try:
        if kind == "clique":
            return clique(int(params[0]))
        if kind == "cycle":
            return cycle(int(params[0]))
        if kind == "path":
            return path(int(params[0]))
        if kind == "star":
            return star(int(params[0]))
        if kind == "dumbbell":
            return dumbbell(int(params[0]))
        if kind == "petersen":
            return petersen()
        if kind == "erdos-renyi":
            return erdos_renyi(int(params[0]), float(params[1]), seed)
        if kind == "random-regular":
            return random_regular(int(params[0]), int(params[1]), seed)
        if kind == "weighted-random":
            mw = int(params[2]) if len(params) > 2 else 16
            return weighted_random(int(params[0]), float(params[1]), mw, seed)
    except (IndexError, ValueError) as exc:
        raise PreconditionError(f"bad parameters for {kind}: {params}") from exc
    raise PreconditionError(f"unknown generator {kind!r}; choose from {', '.join(KINDS)}")
