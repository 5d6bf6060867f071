"""All-pairs effective resistances through an explicit sketch matrix.

Every sketch evaluation is a quadratic form in the query: centring is the
linear map ``O = I - 1 d^T / vol`` and the four sums are ``y^T B y`` with
``B = diag(deg) - A~`` for a sparse symmetric ``A~`` built from the stored and
sampled edges.  Summing ``2**(level-1) O^T B O`` over components gives ``M``
with ``f(x) = x^T M x``.  Then ``Q = 2S - S M S`` answers any
``b^T L^+ b`` query as ``b^T Q b``; for ``b = chi_u - chi_v`` that is four reads.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import CertificationError, PreconditionError
from .graph import WeightedGraph, component_labels
from .pinv import PseudoinverseSketch, build_pinv_sketch
from .rng import derive_seed, generator
from .sketch import ComponentSketchData, LaplacianSketch
from .solver import SolverOperator

SYMMETRY_TOL = 1e-8


def component_matrix(dat: ComponentSketchData) -> np.ndarray:
    """Dense ``O^T B O`` for one component, in local coordinates."""
    n = dat.n
    deg = dat.deg.astype(np.float64)
    vol = deg.sum()
    if n == 0 or vol == 0:
        return np.zeros((n, n))
    src = [dat.stored_src]
    dst = [dat.stored_dst]
    val = [np.ones(dat.stored_src.size)]
    to_high = ~dat.low[dat.stored_dst]
    src.append(dat.stored_src[to_high])
    dst.append(dat.stored_dst[to_high])
    val.append(np.ones(int(to_high.sum())))
    if dat.sample_src.size:
        src.append(dat.sample_src)
        dst.append(dat.sample_dst)
        val.append(dat.high_internal_deg[dat.sample_src] / dat.alpha * dat.sample_count)
    A = sp.coo_matrix((np.concatenate(val), (np.concatenate(src), np.concatenate(dst))),
                      shape=(n, n)).toarray()
    B = np.diag(deg) - (A + A.T) / 2
    # O^T B O with O = I - 1 d^T / vol, expanded to avoid forming O
    r = B.sum(axis=1)
    t = r.sum()
    dv = deg / vol
    return B - np.outer(r, dv) - np.outer(dv, r) + t * np.outer(dv, dv)


def matrixize(sk: LaplacianSketch) -> np.ndarray:
    """``M`` with ``x^T M x == eval_sketch(sk, x)`` up to rounding."""
    M = np.zeros((sk.n, sk.n))
    for e in sk.entries:
        idx = e.vertices
        M[np.ix_(idx, idx)] += math.ldexp(1.0, e.level - 1) * component_matrix(e.dat)
    return M / sk.scale


def build_Q(solver: SolverOperator, M: np.ndarray, probes: int = 8, seed: int = 0) -> np.ndarray:
    """``2 S - S M S`` from the materialized columns of ``S``."""
    if M.shape != (solver.n, solver.n):
        raise PreconditionError(f"M has shape {M.shape}, solver acts on {solver.n} vertices")
    raw = solver.apply(np.eye(solver.n), check=False)
    rng = generator(seed, "symmetry")
    for _ in range(probes):
        a, b = rng.standard_normal(solver.n), rng.standard_normal(solver.n)
        gap = abs(a @ (raw @ b) - b @ (raw @ a))
        if gap > SYMMETRY_TOL * np.linalg.norm(a) * np.linalg.norm(b) * max(1.0, np.abs(raw).max()):
            raise CertificationError(f"solver operator is not symmetric (probe gap {gap:.3e})",
                                     measured=gap)
    S = (raw + raw.T) / 2
    return 2 * S - S @ (M @ S)


@dataclass(eq=False)
class ResistanceMatrix:
    """Per-copy ``Q`` matrices and the median resistance table."""

    qs: list[np.ndarray]
    labels: np.ndarray
    R: np.ndarray | None = None
    reads: int = field(default=0, repr=False)

    @property
    def n(self) -> int:
        return int(self.labels.size)

    @property
    def copies(self) -> int:
        return len(self.qs)

    def _read(self, Q, i, j):
        self.reads += 1
        return Q[i, j]

    def query(self, u: int, v: int) -> float:
        """Median over copies of ``(chi_u - chi_v)^T Q (chi_u - chi_v)``."""
        if u == v:
            return 0.0
        if self.labels[u] != self.labels[v]:
            return math.inf
        vals = [(self._read(Q, u, u) + self._read(Q, v, v)) - (self._read(Q, u, v) + self._read(Q, v, u))
                for Q in self.qs]
        return float(np.median(vals)) if len(vals) > 1 else float(vals[0])

    def table(self) -> np.ndarray:
        if self.R is None:
            per = []
            for Q in self.qs:
                d = np.diag(Q)
                per.append((d[:, None] + d[None, :]) - (Q + Q.T))
            R = np.median(np.stack(per), axis=0) if len(per) > 1 else per[0]
            R[self.labels[:, None] != self.labels[None, :]] = np.inf
            np.fill_diagonal(R, 0.0)
            self.R = R
        return self.R

    def pairs(self, pairs) -> list[tuple[int, int, float]]:
        return [(int(u), int(v), self.query(int(u), int(v))) for u, v in pairs]

    def write_tsv(self, path, pairs=None, labels=None) -> None:
        name = (lambda i: labels[i]) if labels is not None else str
        lines = ["# u\tv\tR"]
        if pairs is None:
            R = self.table()
            iu, ju = np.triu_indices(self.n, k=1)
            lines += [f"{name(i)}\t{name(j)}\t{R[i, j]!r}" for i, j in zip(iu.tolist(), ju.tolist())]
        else:
            lines += [f"{name(u)}\t{name(v)}\t{r!r}" for u, v, r in self.pairs(pairs)]
        Path(path).write_text("\n".join(lines) + "\n")


def default_copies(n: int) -> int:
    return 2 * math.ceil(math.log2(max(n, 2))) + 1


def copy_seed(seed: int, c: int) -> int:
    return derive_seed(seed, "copy", c)


def q_for_sketch(psk: PseudoinverseSketch) -> np.ndarray:
    """``Q`` for one pinv sketch (the first Laplacian sketch copy)."""
    return build_Q(psk.solver, matrixize(psk.sketches[0]), seed=psk.seed)


def all_pairs_resistances(G: WeightedGraph, epsilon: float, copies: int | None = None,
                          seed: int = 0, threads: int = 1, **build_kw) -> ResistanceMatrix:
    """Independent (solver, sketch, M, Q) stacks per copy; median over copies.

    ``build_kw`` is forwarded to :func:`build_pinv_sketch` (``c_alpha``,
    ``dense_threshold`` ...).  Copy ``c`` uses seed ``copy_seed(seed, c)``.
    """
    if copies is None:
        copies = default_copies(G.n)
    if copies < 1 or copies % 2 == 0:
        raise PreconditionError("copies must be a positive odd integer")

    def one(c):
        psk = build_pinv_sketch(G, epsilon, copy_seed(seed, c), **build_kw)
        return q_for_sketch(psk)

    if threads > 1 and copies > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            qs = list(pool.map(one, range(copies)))
    else:
        qs = [one(c) for c in range(copies)]
    _, labels = component_labels(G)
    return ResistanceMatrix(qs, labels)
