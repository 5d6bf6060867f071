"""Brute-force ground truth.

Everything here is dense and cubic (or exponential, for conductance) on
purpose: these routines check the fast paths and share no code with them
beyond the graph container.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError
from .graph import WeightedGraph, check_in_range, component_labels
from .rng import generator

PINV_RTOL = 1e-9
EXHAUSTIVE_MAX_N = 22


class DenseOracle:
    """Dense Laplacian, its eigendecomposition and pseudoinverse."""

    def __init__(self, G: WeightedGraph):
        self.graph = G
        self.L = G.dense_laplacian()
        self.eigenvalues, self.eigenvectors = np.linalg.eigh(self.L)
        top = self.eigenvalues[-1] if G.n else 0.0
        keep = self.eigenvalues > PINV_RTOL * max(top, 1e-300)
        v = self.eigenvectors[:, keep]
        self.pinv = (v / self.eigenvalues[keep]) @ v.T
        self.ncomp, self.labels = component_labels(G)

    def pinv_quadratic(self, b) -> float:
        b = np.asarray(b, dtype=np.float64)
        check_in_range(self.labels, self.ncomp, b)
        return float(b @ self.pinv @ b)

    def resistances(self) -> np.ndarray:
        d = np.diag(self.pinv)
        R = d[:, None] + d[None, :] - 2 * self.pinv
        R[self.labels[:, None] != self.labels[None, :]] = np.inf
        np.fill_diagonal(R, 0.0)
        return R

    def incidence_resistances(self) -> np.ndarray:
        """Squared distances between the columns of ``W^1/2 B L^+``."""
        G = self.graph
        B = np.zeros((G.m, G.n))
        B[np.arange(G.m), G.u] = 1.0
        B[np.arange(G.m), G.v] = -1.0
        Z = np.sqrt(G.real_weights)[:, None] * B @ self.pinv
        sq = np.einsum("ij,ij->j", Z, Z)
        R = sq[:, None] + sq[None, :] - 2 * Z.T @ Z
        R[self.labels[:, None] != self.labels[None, :]] = np.inf
        np.fill_diagonal(R, 0.0)
        return R


def dense_pinv_quadratic(G: WeightedGraph, b) -> float:
    """Exact ``b^T L^+ b``; ``b`` must sum to zero on every component."""
    return DenseOracle(G).pinv_quadratic(b)


def exhaustive_conductance(G: WeightedGraph) -> float:
    """Minimum conductance over all proper cuts, by enumeration (``n <= 22``)."""
    n = G.n
    if n > EXHAUSTIVE_MAX_N:
        raise DomainError(f"exhaustive conductance is capped at n={EXHAUSTIVE_MAX_N}; "
                          "use a constructed instance or sampled certification")
    if n < 2:
        raise DomainError("conductance needs at least two vertices")
    deg = G.degrees.astype(np.float64) / G.scale
    w = G.real_weights
    total = deg.sum()
    best = math.inf
    # cuts never contain vertex n-1; complements cover the rest
    count = 1 << (n - 1)
    shifts = np.arange(n - 1, dtype=np.int64)
    chunk = 1 << 15
    for lo in range(1, count, chunk):
        masks = np.arange(lo, min(lo + chunk, count), dtype=np.int64)
        bits = ((masks[:, None] >> shifts) & 1).astype(np.uint8)
        bits = np.concatenate([bits, np.zeros((bits.shape[0], 1), dtype=np.uint8)], axis=1)
        vol = bits @ deg
        cross = (bits[:, G.u] ^ bits[:, G.v]) @ w
        denom = np.minimum(vol, total - vol)
        ok = denom > 0
        if ok.any():
            best = min(best, float(np.min(cross[ok] / denom[ok])))
    return best


def normalized_lambda2(G: WeightedGraph) -> float:
    deg = G.degrees.astype(np.float64) / G.scale
    if np.any(deg == 0):
        raise DomainError("normalized Laplacian needs every vertex to have positive degree")
    dih = 1.0 / np.sqrt(deg)
    N = dih[:, None] * G.dense_laplacian() * dih[None, :]
    return float(np.linalg.eigvalsh(N)[1])


def cheeger_check(G: WeightedGraph) -> tuple[float, float, bool]:
    """``(lambda_2(N), Phi, lambda_2 >= Phi**2 / 2)`` for a connected graph."""
    k, _ = component_labels(G)
    if k != 1:
        raise DomainError("Cheeger check needs a connected graph")
    lam = normalized_lambda2(G)
    phi = exhaustive_conductance(G)
    return lam, phi, bool(lam >= phi * phi / 2 - 1e-12)


@dataclass
class JLBaseline:
    R: np.ndarray
    k: int
    projection: np.ndarray

    @property
    def stored_floats(self) -> int:
        return int(self.projection.size)

    @property
    def stored_bytes(self) -> int:
        return int(self.projection.nbytes)


def jl_dimension(n: int, epsilon: float) -> int:
    return math.ceil(24 * math.log(max(n, 2)) / epsilon**2)


def jl_baseline_resistances(G: WeightedGraph, epsilon: float, seed: int = 0, *,
                            k: int | None = None, orthonormal: bool = False) -> JLBaseline:
    """Johnson–Lindenstrauss resistances from ``Q W^1/2 B L^+``.

    ``Q`` has ``k = ceil(24 ln n / eps^2)`` rows of random ``+-1/sqrt(k)``
    entries.  With ``orthonormal=True`` and ``k >= m``, ``Q`` has orthonormal
    columns and the estimates are exact.
    """
    if k is None:
        k = jl_dimension(G.n, epsilon)
    rng = generator(seed, "jl")
    if orthonormal:
        if k < G.m:
            raise DomainError("orthonormal projection needs k >= m")
        Q, _ = np.linalg.qr(rng.standard_normal((k, G.m)))
    else:
        Q = rng.choice([-1.0, 1.0], size=(k, G.m)) / math.sqrt(k)
    orc = DenseOracle(G)
    B = np.zeros((G.m, G.n))
    B[np.arange(G.m), G.u] = 1.0
    B[np.arange(G.m), G.v] = -1.0
    Z = Q @ (np.sqrt(G.real_weights)[:, None] * B) @ orc.pinv
    sq = np.einsum("ij,ij->j", Z, Z)
    R = sq[:, None] + sq[None, :] - 2 * Z.T @ Z
    R[orc.labels[:, None] != orc.labels[None, :]] = np.inf
    np.fill_diagonal(R, 0.0)
    return JLBaseline(R, k, Z)


@dataclass
class MCStats:
    mean: np.ndarray | float
    variance: np.ndarray | float
    stderr: np.ndarray | float
    trials: int


def monte_carlo_stats(builder: Callable[[int], Callable], x, trials: int, seed: int = 0,
                      batched: bool = False) -> MCStats:
    """Sample moments of ``builder(s)(x)`` over ``trials`` independent seeds.

    ``x`` may be a single vector or a 2-D stack; one realization is shared by
    every row of the stack.  With ``batched=True`` the estimator is called once
    per realization on the whole stack and must return one value per row.
    """
    if trials < 2:
        raise DomainError("need at least two trials")
    xs = np.atleast_2d(np.asarray(x, dtype=np.float64))
    vals = np.empty((trials, xs.shape[0]))
    for t in range(trials):
        est = builder(seed + t)
        if batched:
            vals[t] = est(xs)
            continue
        for r in range(xs.shape[0]):
            vals[t, r] = est(xs[r])
    mean = vals.mean(axis=0)
    var = vals.var(axis=0, ddof=1)
    se = np.sqrt(var / trials)
    if np.ndim(x) == 1:
        return MCStats(float(mean[0]), float(var[0]), float(se[0]), trials)
    return MCStats(mean, var, se, trials)
