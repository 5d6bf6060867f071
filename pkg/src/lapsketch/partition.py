"""Expander-style edge partitioning of integer-weighted graphs.

Each bit level of the graph is peeled in rounds.  A round finds disjoint
vertex clusters that look like expanders and keeps the edges inside them;
edges between clusters go on to the next round.  Clusters are found by
recursive spectral bisection: estimate the second eigenvector of the
normalized Laplacian, sweep it, and split whenever the best sweep cut has
conductance below ``phi_target``.  A cluster is *certified* when its own sweep
finds nothing below the target.  This is a heuristic certificate; nothing here
proves a conductance lower bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DomainError
from .graph import (CutSpec, WeightedGraph, bit_bucket, component_labels,
                    connected_components, induced_subgraph)
from .rng import derive_seed, generator


def default_phi_target(n: int, constant: float = 0.25) -> float:
    lg = max(math.log2(max(n, 2)), 1.0)
    return constant / lg**2


def default_round_cap(m: int) -> int:
    return 2 * math.ceil(math.log2(max(m, 1))) + 4


def default_iters(n: int) -> int:
    return 200 * max(1, math.ceil(math.log2(max(n, 2))))


# -- spectral primitives -----------------------------------------------------


def second_eigvec_estimate(G: WeightedGraph, iters: int | None = None, seed: int = 0,
                           rtol: float = 1e-8) -> np.ndarray:
    """Unit vector approximating the second eigenvector of ``D^-1/2 L D^-1/2``.

    Power iteration on ``2I - N`` with ``D^1/2 1`` projected out after every
    step.  Stops early once the Rayleigh quotient changes by less than
    ``rtol`` (relative).
    """
    if G.n < 2:
        raise DomainError("need at least two vertices")
    k, _ = component_labels(G)
    if k != 1:
        raise DomainError(f"graph is disconnected ({k} components)")
    if iters is None:
        iters = default_iters(G.n)
    if iters < 1:
        raise DomainError("iters must be >= 1")

    d = G.degrees.astype(np.float64)
    dinv = 1.0 / np.sqrt(d)
    q = np.sqrt(d)
    q /= np.linalg.norm(q)
    indptr, nbr, wts = G.csr
    src = np.repeat(np.arange(G.n), np.diff(indptr))
    wts = wts.astype(np.float64)

    def step(x):
        s = x * dinv
        ax = np.bincount(src, weights=wts * s[nbr], minlength=G.n)
        return x + dinv * ax

    x = generator(seed, "power").standard_normal(G.n)
    x -= q * (q @ x)
    x /= np.linalg.norm(x)
    prev = None
    for _ in range(iters):
        y = step(x)
        y -= q * (q @ y)
        rq = float(x @ y)
        ny = np.linalg.norm(y)
        if ny <= 1e-14:
            # only the eigenvalue-2 direction survives deflation (a single edge)
            break
        x = y / ny
        if prev is not None and abs(rq - prev) <= rtol * abs(rq):
            break
        prev = rq
    return x


def sweep_cut(G: WeightedGraph, vec) -> tuple[CutSpec, float]:
    """Best prefix cut of the vertices ordered by ``D^-1/2 vec``.

    Evaluates all ``n - 1`` prefixes; ties go to the shorter prefix.
    """
    vec = np.asarray(vec, dtype=np.float64)
    if vec.shape != (G.n,):
        raise DomainError(f"order vector must have length {G.n}")
    if G.n < 2:
        raise DomainError("need at least two vertices to cut")
    d = G.degrees.astype(np.float64)
    vals = vec / np.sqrt(np.where(d > 0, d, 1.0))
    order = np.lexsort((np.arange(G.n), vals))
    pos = np.empty(G.n, dtype=np.int64)
    pos[order] = np.arange(G.n)
    last = np.maximum(pos[G.u], pos[G.v])
    inside = np.cumsum(np.bincount(last, weights=G.w.astype(np.float64), minlength=G.n))
    vol = np.cumsum(d[order])
    total = vol[-1]
    # prefix k holds positions < k; an edge is internal once k > last
    k = np.arange(1, G.n)
    internal = inside[k - 1]
    vs = vol[k - 1]
    cross = vs - 2.0 * internal
    denom = np.minimum(vs, total - vs)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(denom > 0, cross / denom, np.inf)
    best = int(np.argmin(phi))
    return CutSpec.of(order[: best + 1].tolist()), float(phi[best])


# -- one partition round -------------------------------------------------------


class ExpanderRound(NamedTuple):
    clusters: list[np.ndarray]
    kept: np.ndarray
    residual: np.ndarray


def expander_round(G: WeightedGraph, phi_target: float, seed: int = 0,
                   iters: int | None = None) -> ExpanderRound:
    """Find certified clusters; return them with kept/residual edge indices into ``G``."""
    if not 0 < phi_target < 1:
        raise DomainError("phi_target must lie in (0, 1)")
    clusters: list[np.ndarray] = []
    stack = [c for c in connected_components(G) if c.size >= 2]
    stack.reverse()
    while stack:
        piece = stack.pop()
        H, verts = induced_subgraph(G, piece)
        if H.n == 2:
            clusters.append(verts)
            continue
        vec = second_eigvec_estimate(
            H, iters, seed=derive_seed(seed, "piece", int(verts[0]), int(verts.size)))
        cut, phi = sweep_cut(H, vec)
        if phi >= phi_target:
            clusters.append(verts)
            continue
        side = cut.mask(H.n)
        parts = []
        for mask in (side, ~side):
            sub, sub_verts = induced_subgraph(H, np.flatnonzero(mask))
            for comp in connected_components(sub):
                if comp.size >= 2:
                    parts.append(verts[sub_verts[comp]])
        stack.extend(reversed(parts))

    cid = np.full(G.n, -1, dtype=np.int64)
    for i, c in enumerate(clusters):
        cid[c] = i
    kept_mask = (cid[G.u] >= 0) & (cid[G.u] == cid[G.v])
    return ExpanderRound(clusters, np.flatnonzero(kept_mask), np.flatnonzero(~kept_mask))


# -- full split ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PartitionEntry:
    level: int
    round: int
    index: int
    vertices: np.ndarray
    graph: WeightedGraph
    certified: bool


@dataclass
class LevelInfo:
    rounds: int = 0
    edges_per_round: list[int] = field(default_factory=list)
    capped: bool = False


@dataclass(eq=False)
class PartitionResult:
    n: int
    entries: list[PartitionEntry]
    levels: dict[int, LevelInfo]
    phi_target: float
    round_cap: int

    def dump(self) -> str:
        """Text form: ``level round component_id : v1 v2 ...``."""
        lines = []
        for e in self.entries:
            flag = "" if e.certified else " !"
            lines.append(f"{e.level} {e.round} {e.index} : "
                         + " ".join(map(str, e.vertices.tolist())) + flag)
        return "\n".join(lines) + ("\n" if lines else "")


def _emit(n, u, v, level, rnd, certified, out):
    Gij = WeightedGraph(n, u, v, np.ones(u.size, dtype=np.int64))
    k = 0
    for comp in connected_components(Gij):
        if comp.size < 2:
            continue
        H, verts = induced_subgraph(Gij, comp)
        out.append(PartitionEntry(level, rnd, k, verts, H, certified))
        k += 1


def split(G: WeightedGraph, phi_target: float | None = None, seed: int = 0,
          round_cap: int | None = None, iters: int | None = None) -> PartitionResult:
    """Bit-bucket ``G`` and peel every level into certified components.

    Rounds stop when a level's edges are used up.  The last permitted round,
    or any round whose heuristic keeps nothing, stores the remaining edges as
    uncertified components.
    """
    if phi_target is None:
        phi_target = default_phi_target(G.n)
    if round_cap is None:
        round_cap = default_round_cap(G.m)
    entries: list[PartitionEntry] = []
    levels: dict[int, LevelInfo] = {}
    for lvl in bit_bucket(G):
        info = LevelInfo()
        levels[lvl.level] = info
        u, v = lvl.graph.u, lvl.graph.v
        j = 0
        while u.size:
            j += 1
            if j < round_cap:
                cur = WeightedGraph(G.n, u, v, np.ones(u.size, dtype=np.int64))
                rr = expander_round(cur, phi_target,
                                    seed=derive_seed(seed, "split", lvl.level, j), iters=iters)
                if rr.kept.size:
                    _emit(G.n, u[rr.kept], v[rr.kept], lvl.level, j, True, entries)
                    info.edges_per_round.append(int(rr.kept.size))
                    u, v = u[rr.residual], v[rr.residual]
                    continue
            _emit(G.n, u, v, lvl.level, j, False, entries)
            info.edges_per_round.append(int(u.size))
            info.capped = True
            u = v = u[:0]
        info.rounds = j
    return PartitionResult(G.n, entries, levels, phi_target, round_cap)
