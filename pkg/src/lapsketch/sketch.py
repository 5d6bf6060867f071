"""Sampling sketches of Laplacian quadratic forms.

A component sketch keeps the degree of every vertex, every edge touching a
low-degree vertex (degree at most ``alpha``), and for each high-degree vertex
``alpha`` uniform samples, with replacement, from its neighbours that are also
high-degree.  Evaluation centres the query by its degree-weighted mean and
returns the four-sum estimator

    sum_u y_u^2 d_u
      - sum_{u low} sum_{(u,v) stored} y_u y_v
      - sum_{u high} sum_{v low, (u,v) stored} y_u y_v
      - sum_{u high} (d^L_u / alpha) sum_{v high} y_u y_v Y^u_v

which is unbiased for ``x^T L_H x``.  A whole-graph sketch partitions the bit
levels of the graph into expander-like components and sums their estimates
with weights ``2**(level-1)``.
"""
from __future__ import annotations

import json
import math
import weakref
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import container
from .errors import DimensionError, PreconditionError
from .graph import WeightedGraph
from .partition import split
from .rng import derive_seed, generator

ALPHA_LOG_POWER = 4.5


@dataclass(frozen=True, eq=False)
class ComponentSketchData:
    """Stored data for one unit-weight component (vertices are local ids)."""

    alpha: int
    deg: np.ndarray
    low: np.ndarray
    high_internal_deg: np.ndarray
    stored_src: np.ndarray
    stored_dst: np.ndarray
    sample_src: np.ndarray
    sample_dst: np.ndarray
    sample_count: np.ndarray

    @property
    def n(self) -> int:
        return int(self.deg.size)

    @property
    def low_set(self) -> np.ndarray:
        return np.flatnonzero(self.low)

    @property
    def high_set(self) -> np.ndarray:
        return np.flatnonzero(~self.low)

    @property
    def is_exact(self) -> bool:
        return bool(self.low.all())

    @property
    def item_count(self) -> int:
        """Stored directed edges plus sampled edges counted with multiplicity."""
        return int(self.stored_src.size + self.sample_count.sum())


_DENSE_KEYS = 1 << 16  # count sampled pairs with bincount below this key space

_plans: "weakref.WeakKeyDictionary[WeightedGraph, dict]" = weakref.WeakKeyDictionary()


def _plan(H: WeightedGraph, alpha: int, exact: bool):
    """Seed-independent part of the sketch, cached per component graph."""
    per_graph = _plans.setdefault(H, {})
    key = (alpha, exact)
    if key in per_graph:
        return per_graph[key]
    deg = H.degrees.astype(np.int64)
    low = np.ones(H.n, dtype=bool) if exact else deg <= alpha
    indptr, nbr, _ = H.csr
    src = np.repeat(np.arange(H.n, dtype=np.int64), np.diff(indptr))
    from_low = low[src]
    stored_src, stored_dst = src[from_low], nbr[from_low]
    hh = ~low[src] & ~low[nbr]
    lsrc, ldst = src[hh], nbr[hh]
    hdeg = np.bincount(lsrc, minlength=H.n).astype(np.int64)
    lptr = np.zeros(H.n, dtype=np.int64)
    if H.n > 1:
        np.cumsum(hdeg[:-1], out=lptr[1:])
    drawn = np.flatnonzero(hdeg > 0)
    unit = not H.m or (H.is_integer and int(H.w.max()) == 1 and int(H.w.min()) == 1)
    plan = (unit, deg, low, hdeg, stored_src, stored_dst, ldst, lptr, drawn, hdeg[drawn][:, None],
            lptr[drawn][:, None], np.where(low, 0, hdeg))
    per_graph[key] = plan
    return plan


def sample_sketch(H: WeightedGraph, alpha: int, seed: int = 0, exact: bool = False) -> ComponentSketchData:
    """Sketch a unit-weight component.

    ``exact=True`` forces every vertex into the low set so ``H`` is stored
    verbatim (used for uncertified partition components).
    """
    if alpha < 1:
        raise PreconditionError("alpha must be >= 1")
    (unit, deg, low, _, stored_src, stored_dst, ldst, _, drawn, hd_col, ptr_col,
     internal) = _plan(H, int(alpha), exact)
    if not unit:
        raise PreconditionError("sample_sketch expects a unit-weight graph")
    if drawn.size:
        rng = generator(seed)
        picks = rng.integers(0, hd_col, size=(drawn.size, alpha))
        key = (drawn[:, None] * H.n + ldst[ptr_col + picks]).ravel()
        if H.n * H.n <= _DENSE_KEYS:
            counts = np.bincount(key, minlength=H.n * H.n)
            uniq = np.flatnonzero(counts)
            counts = counts[uniq]
        else:
            uniq, counts = np.unique(key, return_counts=True)
        s_src, s_dst, s_cnt = uniq // H.n, uniq % H.n, counts.astype(np.int64)
    else:
        s_src = s_dst = s_cnt = np.zeros(0, dtype=np.int64)
    return ComponentSketchData(int(alpha), deg, low, internal, stored_src, stored_dst,
                               s_src, s_dst, s_cnt)


def _center(deg: np.ndarray, x: np.ndarray) -> np.ndarray:
    # anchoring at x[..., 0] makes the centring bit-exact under exact shifts of x
    r = x - x[..., :1]
    total = float(deg.sum())
    c = np.array([math.fsum(row) / total for row in np.atleast_2d(deg * r)])
    return r - (c[0] if x.ndim == 1 else c[:, None])


def _fsum_rows(a: np.ndarray) -> np.ndarray:
    return np.array([math.fsum(row) for row in a])


def expander_eval(dat: ComponentSketchData, x):
    """Four-sum estimate of ``x^T L_H x`` from a component sketch.

    ``x`` may be one vector or a 2-D stack of row queries; a stack returns one
    estimate per row, each equal to the single-vector result.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1:] != (dat.n,) or x.ndim not in (1, 2):
        raise DimensionError(f"component has {dat.n} vertices, query has shape {x.shape}")
    rows = np.atleast_2d(x)
    if dat.n == 0 or dat.deg.sum() == 0:
        out = np.zeros(rows.shape[0])
    else:
        y = _center(dat.deg, rows)
        ys, yd = y[:, dat.stored_src], y[:, dat.stored_dst]
        to_high = ~dat.low[dat.stored_dst]
        out = _fsum_rows(y * y * dat.deg) - _fsum_rows(ys * yd) - _fsum_rows(yd[:, to_high] * ys[:, to_high])
        if dat.sample_src.size:
            coef = dat.high_internal_deg[dat.sample_src] / dat.alpha
            out = out - _fsum_rows(coef * y[:, dat.sample_src] * y[:, dat.sample_dst] * dat.sample_count)
    return float(out[0]) if x.ndim == 1 else out


# -- whole-graph sketch -------------------------------------------------------------


def alpha_for(n: int, epsilon: float, c_alpha: float = 1.0) -> int:
    lg = math.log2(n) if n > 1 else 0.0
    return max(1, math.ceil(c_alpha * lg**ALPHA_LOG_POWER / epsilon))


@dataclass(frozen=True, eq=False)
class SketchEntry:
    level: int
    round: int
    index: int
    vertices: np.ndarray
    dat: ComponentSketchData
    flagged: bool


@dataclass(frozen=True, eq=False)
class LaplacianSketch:
    n: int
    epsilon: float
    seed: int
    alpha: int
    c_alpha: float
    scale: int
    graph_hash: str
    entries: tuple[SketchEntry, ...]

    @property
    def item_count(self) -> int:
        return sum(e.dat.item_count for e in self.entries)

    @property
    def is_exact(self) -> bool:
        return all(e.dat.is_exact for e in self.entries)

    def size_budget(self, constant: float = 1.0) -> float:
        lg = math.log2(self.n) if self.n > 1 else 1.0
        return constant * self.n * self.alpha * lg**2

    def __call__(self, x) -> float:
        return eval_sketch(self, x)

    # serialization

    def to_arrays(self) -> tuple[dict, dict[str, np.ndarray]]:
        es = self.entries
        meta = {"n": self.n, "epsilon": self.epsilon, "seed": self.seed, "alpha": self.alpha,
                "c_alpha": self.c_alpha, "scale": self.scale, "graph_hash": self.graph_hash}

        def cat(get, dtype=np.int64):
            parts = [np.asarray(get(e), dtype=dtype) for e in es]
            return np.concatenate(parts) if parts else np.zeros(0, dtype=dtype)

        def ptr(get):
            p = np.zeros(len(es) + 1, dtype=np.int64)
            if es:
                np.cumsum([get(e).size for e in es], out=p[1:])
            return p

        arrays = {
            "entry_meta": np.array([[e.level, e.round, e.index, e.dat.alpha, int(e.flagged)] for e in es],
                                   dtype=np.int64).reshape(len(es), 5),
            "vert_ptr": ptr(lambda e: e.vertices),
            "vertices": cat(lambda e: e.vertices),
            "deg": cat(lambda e: e.dat.deg),
            "low": cat(lambda e: e.dat.low, np.uint8),
            "hdeg": cat(lambda e: e.dat.high_internal_deg),
            "stored_ptr": ptr(lambda e: e.dat.stored_src),
            "stored_src": cat(lambda e: e.dat.stored_src),
            "stored_dst": cat(lambda e: e.dat.stored_dst),
            "sample_ptr": ptr(lambda e: e.dat.sample_src),
            "sample_src": cat(lambda e: e.dat.sample_src),
            "sample_dst": cat(lambda e: e.dat.sample_dst),
            "sample_count": cat(lambda e: e.dat.sample_count),
        }
        return meta, arrays

    @classmethod
    def from_arrays(cls, meta: dict, a: dict[str, np.ndarray]) -> "LaplacianSketch":
        entries = []
        vp, sp_, qp = a["vert_ptr"], a["stored_ptr"], a["sample_ptr"]
        for i, (level, rnd, idx, alpha, flagged) in enumerate(a["entry_meta"].tolist()):
            vs = slice(vp[i], vp[i + 1])
            ss = slice(sp_[i], sp_[i + 1])
            qs = slice(qp[i], qp[i + 1])
            dat = ComponentSketchData(
                int(alpha), a["deg"][vs], a["low"][vs].astype(bool), a["hdeg"][vs],
                a["stored_src"][ss], a["stored_dst"][ss],
                a["sample_src"][qs], a["sample_dst"][qs], a["sample_count"][qs])
            entries.append(SketchEntry(level, rnd, idx, a["vertices"][vs], dat, bool(flagged)))
        return cls(meta["n"], meta["epsilon"], meta["seed"], meta["alpha"], meta["c_alpha"],
                   meta["scale"], meta["graph_hash"], tuple(entries))

    def to_bytes(self) -> bytes:
        meta, arrays = self.to_arrays()
        return container.pack("laplacian-sketch", meta, arrays)

    @classmethod
    def from_bytes(cls, data: bytes) -> "LaplacianSketch":
        meta, arrays = container.unpack(data, "laplacian-sketch")
        return cls.from_arrays(meta, arrays)

    def to_json(self) -> str:
        meta, arrays = self.to_arrays()
        meta = dict(meta, item_count=self.item_count, exact=self.is_exact)
        return json.dumps({"meta": meta, "arrays": {k: v.tolist() for k, v in arrays.items()}},
                          sort_keys=True, indent=1)


def build_sketch(G: WeightedGraph, epsilon: float, seed: int = 0, *, c_alpha: float = 1.0,
                 alpha: int | None = None, phi_target: float | None = None,
                 round_cap: int | None = None, iters: int | None = None) -> LaplacianSketch:
    """Partition ``G`` and sketch every component.

    The per-vertex budget is ``ceil(c_alpha * log2(n)**4.5 / epsilon)`` unless
    ``alpha`` is given explicitly.  Uncertified components are stored exactly.
    """
    if not 0 < epsilon <= 1:
        raise PreconditionError("epsilon must lie in (0, 1]")
    a = alpha if alpha is not None else alpha_for(G.n, epsilon, c_alpha)
    part = split(G, phi_target, seed=derive_seed(seed, "split"), round_cap=round_cap, iters=iters)
    entries = []
    for e in part.entries:
        dat = sample_sketch(e.graph, a, derive_seed(seed, "lap", e.level, e.round, e.index),
                            exact=not e.certified)
        entries.append(SketchEntry(e.level, e.round, e.index, e.vertices, dat, not e.certified))
    return LaplacianSketch(G.n, float(epsilon), int(seed), int(a), float(c_alpha), G.scale,
                           G.content_hash(), tuple(entries))


def eval_sketch(sk: LaplacianSketch, x) -> float:
    """Sum of ``2**(level-1)`` times each component estimate, in real units."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (sk.n,):
        raise DimensionError(f"expected a vector of length {sk.n}, got shape {x.shape}")
    parts = [math.ldexp(expander_eval(e.dat, x[e.vertices]), e.level - 1) for e in sk.entries]
    return math.fsum(parts) / sk.scale


def boosted_eval(sks: Sequence[LaplacianSketch], x) -> float:
    """Median over independently seeded sketches."""
    if not sks:
        raise PreconditionError("boosted_eval needs at least one sketch")
    if len(sks) == 1:
        return eval_sketch(sks[0], x)
    return float(np.median([eval_sketch(s, x) for s in sks]))


def build_boosted(G: WeightedGraph, epsilon: float, copies: int, seed: int = 0, **kwargs) -> list[LaplacianSketch]:
    if copies < 1:
        raise PreconditionError("copies must be >= 1")
    return [build_sketch(G, epsilon, derive_seed(seed, "copy", c), **kwargs) for c in range(copies)]
