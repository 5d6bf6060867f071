"""Integer-weighted undirected graphs and exact Laplacian arithmetic.

A :class:`WeightedGraph` stores its edges canonically: ``u < v``, sorted
lexicographically, one row per unordered pair.  Weights are positive integers
(``int64``).  Decimal input weights are scaled by ``2**scale_bits`` and rounded
at ingest; the scale is kept on the graph so every numeric result reported by
the package stays in the caller's original units.

Real-valued weights are allowed only for internal graphs (spectral
sparsifiers), built with :meth:`WeightedGraph.from_arrays`.
"""
from __future__ import annotations

import hashlib
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components as _cc

from .errors import DimensionError, DomainError, IngestError, RangeViolation

DEFAULT_SCALE_BITS = 16
DEFAULT_WEIGHT_EXPONENT = 4


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Canonical undirected graph on vertices ``0..n-1``.

    Use :meth:`from_edges` for user input; it validates, merges parallel edges
    and handles decimal weights.  The dataclass constructor trusts its
    arguments to be canonical already.
    """

    n: int
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    scale: int = 1
    labels: tuple | None = field(default=None, repr=False)

    # -- construction -----------------------------------------------------

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Iterable[Sequence],
        *,
        scale_bits: int = DEFAULT_SCALE_BITS,
        weight_exponent: float = DEFAULT_WEIGHT_EXPONENT,
        labels: Sequence | None = None,
    ) -> "WeightedGraph":
        """Build a graph from ``(u, v)`` or ``(u, v, w)`` tuples.

        Parallel edges are merged by adding weights.  If any weight is not an
        integer, all weights are multiplied by ``2**scale_bits`` and rounded;
        a warning reports the worst relative rounding error.
        """
        rows = [tuple(e) for e in edges]
        if n < 0:
            raise IngestError("vertex count must be non-negative")
        if not rows:
            z = np.zeros(0, dtype=np.int64)
            return cls(n, z, z.copy(), z.copy(), 1, tuple(labels) if labels is not None else None)
        uu = np.array([r[0] for r in rows], dtype=np.int64)
        vv = np.array([r[1] for r in rows], dtype=np.int64)
        ww = [r[2] if len(r) > 2 else 1 for r in rows]
        if uu.min() < 0 or vv.min() < 0 or uu.max() >= n or vv.max() >= n:
            raise IngestError(f"vertex id out of range [0, {n})")
        loops = np.flatnonzero(uu == vv)
        if loops.size:
            raise IngestError(f"self-loop at vertex {int(uu[loops[0]])} is not allowed")
        wf = np.array([float(x) for x in ww], dtype=np.float64)
        if not np.all(np.isfinite(wf)) or np.any(wf <= 0):
            raise IngestError("edge weights must be finite and positive")

        integral = all(_is_integral(x) for x in ww)
        scale = 1
        if integral:
            wi = np.array([int(x) for x in ww], dtype=np.int64)
        else:
            scale = 1 << scale_bits
            scaled = wf * scale
            wi = np.rint(scaled).astype(np.int64)
            if np.any(wi < 1):
                raise IngestError(
                    f"weight below 2**-{scale_bits + 1} rounds to zero; raise scale_bits"
                )
            err = float(np.max(np.abs(wi - scaled) / scaled))
            warnings.warn(
                f"decimal weights scaled by 2**{scale_bits}; max relative rounding error {err:.3e}",
                stacklevel=2,
            )

        w_max = max(n, 2) ** weight_exponent
        if np.max(wf) > w_max:
            raise IngestError(
                f"weight {np.max(wf):g} exceeds the polynomial bound n**{weight_exponent} = {w_max:g}"
            )

        lo = np.minimum(uu, vv)
        hi = np.maximum(uu, vv)
        key = lo * n + hi
        uniq, inv = np.unique(key, return_inverse=True)
        merged = np.zeros(uniq.size, dtype=np.int64)
        np.add.at(merged, inv, wi)
        return cls(
            n,
            uniq // n,
            uniq % n,
            merged,
            scale,
            tuple(labels) if labels is not None else None,
        )

    @classmethod
    def from_arrays(cls, n: int, u, v, w, scale: int = 1) -> "WeightedGraph":
        """Canonicalize raw arrays without integer checks (internal graphs)."""
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        w = np.asarray(w)
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        order = np.lexsort((hi, lo))
        return cls(n, lo[order], hi[order], w[order], scale)

    # -- basic views ------------------------------------------------------

    @property
    def m(self) -> int:
        return int(self.u.size)

    @property
    def is_integer(self) -> bool:
        return np.issubdtype(self.w.dtype, np.integer)

    @property
    def real_weights(self) -> np.ndarray:
        """Weights in the caller's units (``w / scale``)."""
        return self.w / self.scale if self.scale != 1 else self.w.astype(np.float64)

    @cached_property
    def degrees(self) -> np.ndarray:
        """Weighted degrees in stored (integer) units."""
        d = np.zeros(self.n, dtype=self.w.dtype if self.m else np.int64)
        np.add.at(d, self.u, self.w)
        np.add.at(d, self.v, self.w)
        return d

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Symmetric adjacency as ``(indptr, indices, weights)``, neighbors sorted."""
        src = np.concatenate([self.u, self.v])
        dst = np.concatenate([self.v, self.u])
        ww = np.concatenate([self.w, self.w])
        order = np.lexsort((dst, src))
        src, dst, ww = src[order], dst[order], ww[order]
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=self.n), out=indptr[1:])
        return indptr, dst, ww

    def laplacian(self) -> sp.csr_matrix:
        """Sparse Laplacian in real units."""
        w = self.real_weights
        a = sp.coo_matrix((np.concatenate([w, w]), (np.concatenate([self.u, self.v]),
                                                    np.concatenate([self.v, self.u]))),
                          shape=(self.n, self.n)).tocsr()
        deg = np.asarray(a.sum(axis=1)).ravel()
        return (sp.diags(deg) - a).tocsr()

    def dense_laplacian(self) -> np.ndarray:
        return self.laplacian().toarray()

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(np.array([self.n, self.scale], dtype=np.int64).tobytes())
        for arr in (self.u, self.v):
            h.update(np.ascontiguousarray(arr, dtype=np.int64).tobytes())
        h.update(str(self.w.dtype).encode())
        h.update(np.ascontiguousarray(self.w).tobytes())
        return h.hexdigest()

    def __repr__(self) -> str:
        return f"WeightedGraph(n={self.n}, m={self.m}, scale={self.scale})"


@dataclass(frozen=True, eq=False)
class LevelGraph:
    """Unit-weight graph holding the edges whose weight has bit ``level`` set (1-based)."""

    level: int
    graph: WeightedGraph


@dataclass(frozen=True)
class CutSpec:
    """A proper vertex subset; the complement is implicit."""

    members: frozenset

    @classmethod
    def of(cls, vertices: Iterable[int]) -> "CutSpec":
        return cls(frozenset(int(x) for x in vertices))

    def mask(self, n: int) -> np.ndarray:
        m = np.zeros(n, dtype=bool)
        if self.members:
            m[np.fromiter(self.members, dtype=np.int64)] = True
        return m


def _is_integral(x) -> bool:
    if isinstance(x, (int, np.integer)):
        return True
    if isinstance(x, str):
        try:
            int(x)
            return True
        except ValueError:
            return False
    xf = float(x)
    return xf.is_integer()


def _check_vector(G: WeightedGraph, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != G.n:
        raise DimensionError(f"expected a vector of length {G.n}, got shape {x.shape}")
    return x


# -- exact arithmetic -------------------------------------------------------


def quadratic_form(G: WeightedGraph, x) -> float:
    """Exact ``x^T L_G x`` (in real units), summed with ``math.fsum``."""
    x = _check_vector(G, x)
    d = x[G.u] - x[G.v]
    return math.fsum(G.w * d * d) / G.scale


def bit_bucket(G: WeightedGraph) -> list[LevelGraph]:
    """Split integer weights into binary levels.

    Returns one unit-weight graph per nonempty bit level ``i`` (1-based) with
    ``sum_i 2**(i-1) L_{G_i} = L_G`` in stored units.  Empty levels are omitted
    but the remaining levels keep their indices.
    """
    if not G.is_integer:
        raise IngestError("bit bucketing needs integer weights; ingest through from_edges")
    if G.m == 0:
        return []
    top = int(G.w.max()).bit_length()
    levels = []
    for i in range(1, top + 1):
        sel = ((G.w >> (i - 1)) & 1).astype(bool)
        if not sel.any():
            continue
        levels.append(LevelGraph(i, WeightedGraph(
            G.n, G.u[sel], G.v[sel], np.ones(int(sel.sum()), dtype=np.int64))))
    return levels


def volume(G: WeightedGraph, mask: np.ndarray) -> float:
    return float(G.degrees[mask].sum()) / G.scale


def cut_weight(G: WeightedGraph, mask: np.ndarray) -> float:
    crossing = mask[G.u] != mask[G.v]
    return float(G.w[crossing].sum()) / G.scale


def cut_conductance(G: WeightedGraph, cut: CutSpec) -> float:
    """Crossing weight over the smaller side's volume; ``inf`` if that volume is 0."""
    mask = cut.mask(G.n)
    k = int(mask.sum())
    if any(x < 0 or x >= G.n for x in cut.members):
        raise DomainError("cut contains a vertex outside the graph")
    if k == 0 or k == G.n:
        raise DomainError("cut must be a proper nonempty subset")
    vol_s = volume(G, mask)
    vol_t = volume(G, ~mask)
    denom = min(vol_s, vol_t)
    if denom == 0:
        return math.inf
    return cut_weight(G, mask) / denom


def component_labels(G: WeightedGraph) -> tuple[int, np.ndarray]:
    """Component count and per-vertex labels, numbered by smallest member."""
    if G.n == 0:
        return 0, np.zeros(0, dtype=np.int64)
    adj = sp.coo_matrix((np.ones(G.m), (G.u, G.v)), shape=(G.n, G.n))
    k, lab = _cc(adj, directed=False)
    # relabel so component ids follow their smallest vertex
    first = np.full(k, G.n, dtype=np.int64)
    np.minimum.at(first, lab, np.arange(G.n))
    rank = np.empty(k, dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(k)
    return k, rank[lab].astype(np.int64)


def connected_components(G: WeightedGraph) -> list[np.ndarray]:
    """Maximal connected vertex sets, each sorted, ordered by smallest vertex."""
    k, lab = component_labels(G)
    order = np.argsort(lab, kind="stable")
    bounds = np.searchsorted(lab[order], np.arange(k + 1))
    return [order[bounds[i]:bounds[i + 1]] for i in range(k)]


def induced_subgraph(G: WeightedGraph, S) -> tuple[WeightedGraph, np.ndarray]:
    """Subgraph on ``S`` plus ``vertices`` with ``vertices[new_id] == old_id``.

    ``vertices`` is sorted, so ``x[vertices]`` restricts a query vector.
    """
    vertices = np.unique(np.asarray(list(S) if not isinstance(S, np.ndarray) else S,
                                    dtype=np.int64))
    old_to_new = np.full(G.n, -1, dtype=np.int64)
    old_to_new[vertices] = np.arange(vertices.size)
    keep = (old_to_new[G.u] >= 0) & (old_to_new[G.v] >= 0)
    H = WeightedGraph(vertices.size, old_to_new[G.u[keep]], old_to_new[G.v[keep]],
                      G.w[keep], G.scale)
    return H, vertices


def check_in_range(labels: np.ndarray, k: int, b: np.ndarray, rtol: float = 1e-7) -> None:
    """Raise :class:`RangeViolation` unless ``b`` sums to ~0 on every component."""
    if b.shape != labels.shape:
        raise DimensionError(f"expected a vector of length {labels.size}, got shape {b.shape}")
    if k == 0:
        return
    sums = np.bincount(labels, weights=b, minlength=k)
    tol = rtol * float(np.linalg.norm(b))
    bad = np.flatnonzero(np.abs(sums) > tol)
    if bad.size:
        c = int(bad[np.argmax(np.abs(sums[bad]))])
        raise RangeViolation(c, float(abs(sums[c])), tol)


def project_to_range(labels: np.ndarray, k: int, b: np.ndarray) -> np.ndarray:
    """Remove the per-component mean of ``b``."""
    if k == 0:
        return b.copy()
    sums = np.bincount(labels, weights=b, minlength=k)
    sizes = np.bincount(labels, minlength=k)
    return b - (sums / sizes)[labels]


# -- edge-list files ---------------------------------------------------------


def _label_key(labels: list[str]):
    try:
        ints = [int(x) for x in labels]
        return sorted(range(len(labels)), key=lambda i: ints[i])
    except ValueError:
        return sorted(range(len(labels)), key=lambda i: labels[i])


def parse_edge_list(text: str, **kwargs) -> WeightedGraph:
    """Parse ``u v [w]`` lines; ``#`` starts a comment.

    Labels are arbitrary tokens.  They are mapped to dense ids in sorted order
    (numeric when every label is an integer), so files already using
    ``0..n-1`` keep their ids.
    """
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise IngestError(f"line {lineno}: expected 'u v [w]', got {raw!r}")
        w = parts[2] if len(parts) == 3 else "1"
        try:
            float(w)
        except ValueError:
            raise IngestError(f"line {lineno}: bad weight {w!r}") from None
        rows.append((parts[0], parts[1], w))
    seen: dict[str, None] = {}
    for a, b, _ in rows:
        seen.setdefault(a)
        seen.setdefault(b)
    names = list(seen)
    order = _label_key(names)
    labels = [names[i] for i in order]
    ids = {lab: i for i, lab in enumerate(labels)}
    edges = [(ids[a], ids[b], w) for a, b, w in rows]
    return WeightedGraph.from_edges(len(labels), edges, labels=labels, **kwargs)


def read_edge_list(path, **kwargs) -> WeightedGraph:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FileNotFoundError(f"cannot read {path}: {exc}") from exc
    return parse_edge_list(text, **kwargs)


def format_edge_list(G: WeightedGraph) -> str:
    labels = G.labels or tuple(str(i) for i in range(G.n))
    out = [f"# n={G.n} m={G.m}"]
    for a, b, w in zip(G.u.tolist(), G.v.tolist(), G.w.tolist()):
        if G.scale != 1:
            out.append(f"{labels[a]} {labels[b]} {w / G.scale!r}")
        else:
            out.append(f"{labels[a]} {labels[b]} {w}")
    return "\n".join(out) + "\n"


def write_edge_list(G: WeightedGraph, path) -> None:
    Path(path).write_text(format_edge_list(G))


def write_label_map(G: WeightedGraph, path) -> None:
    labels = G.labels or tuple(str(i) for i in range(G.n))
    Path(path).write_text("".join(f"{i}\t{lab}\n" for i, lab in enumerate(labels)))


def read_label_map(path) -> list[str]:
    labels = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            i, lab = line.split("\t", 1)
            if int(i) != len(labels):
                raise IngestError(f"label map {path} is not dense at id {i}")
            labels.append(lab)
    return labels


def read_vector(path) -> np.ndarray:
    """One value per line in dense-id order; ``#`` comments allowed."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FileNotFoundError(f"cannot read {path}: {exc}") from exc
    vals = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            vals.extend(float(t) for t in line.split())
    return np.array(vals, dtype=np.float64)
