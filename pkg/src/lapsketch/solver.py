"""Spectral sparsification and a fixed-polynomial approximate pseudoinverse.

The served operator is

    S = 1/2 N sum_{k=0}^{z} (I - L' N / 2)^k

where ``L'`` is a spectral sparsifier of ``G`` and ``N`` is a preconditioner
with ``1/2 N^+ <= L' <= 2 N^+``.  ``S`` is a polynomial in ``L' N`` applied
after ``N``, so it is linear and symmetric; iterative solvers appear only
during construction (leverage-score estimation on large graphs).

``N`` comes in two modes.  *dense*: the exact pseudoinverse of ``L'``, block
by block over components.  *poly*: a Chebyshev polynomial in the normalized
Laplacian of ``L'``, certified on probe vectors at build time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, cg, lobpcg

from . import container
from .errors import CertificationError, PreconditionError
from .graph import WeightedGraph, check_in_range, component_labels
from .rng import derive_seed, generator

DENSE_THRESHOLD = 2048
C_S = 9.0
Z_MARGIN = 2
POLY_ETA = 1.0 / 3.0
CG_RTOL = 1e-8


def z_formula(epsilon: float) -> int:
    return math.ceil(4 * math.log(16 / math.sqrt(epsilon)))


# -- dense helpers --------------------------------------------------------------------


def _block_pinv(L: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    """Pseudoinverse of a Laplacian, one connected block at a time.

    Each block of size >= 2 has exactly one zero eigenvalue, so the smallest
    is dropped rather than thresholded.
    """
    P = np.zeros_like(L)
    for c in range(k):
        idx = np.flatnonzero(labels == c)
        if idx.size < 2:
            continue
        vals, vecs = np.linalg.eigh(L[np.ix_(idx, idx)])
        vecs = vecs[:, 1:]
        P[np.ix_(idx, idx)] = (vecs / vals[1:]) @ vecs.T
    return P


def _incidence(G: WeightedGraph) -> sp.csr_matrix:
    rows = np.repeat(np.arange(G.m), 2)
    cols = np.column_stack([G.u, G.v]).ravel()
    vals = np.tile([1.0, -1.0], G.m)
    return sp.csr_matrix((vals, (rows, cols)), shape=(G.m, G.n))


# -- sparsifier ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpectralSparsifier:
    graph: WeightedGraph
    gamma: float
    c_s: float
    leverage_mode: str
    attempts: int = 1
    fallback: bool = False

    @property
    def edge_bound(self) -> float:
        n = self.graph.n
        return self.c_s * n * math.log(max(n, 2)) / self.gamma**2


def leverage_scores(G: WeightedGraph, seed: int = 0, dense_threshold: int = DENSE_THRESHOLD,
                    jl_k: int | None = None) -> tuple[np.ndarray, str]:
    """``w_e R_e`` for every edge: exact below the threshold, JL + CG above."""
    w = G.real_weights
    if G.m == 0:
        return np.zeros(0), "dense"
    k, labels = component_labels(G)
    if G.n <= dense_threshold:
        P = _block_pinv(G.dense_laplacian(), labels, k)
        R = P[G.u, G.u] + P[G.v, G.v] - 2 * P[G.u, G.v]
        return w * R, "dense"
    if jl_k is None:
        jl_k = math.ceil(24 * math.log(G.n) / 0.25**2)
    rng = generator(seed, "leverage-jl")
    L = G.laplacian()
    Bw = sp.diags(np.sqrt(w)) @ _incidence(G)
    X = np.empty((jl_k, G.n))
    for i in range(jl_k):
        q = rng.choice([-1.0, 1.0], size=G.m) / math.sqrt(jl_k)
        rhs = Bw.T @ q
        x, info = cg(L, rhs, rtol=CG_RTOL, maxiter=20 * G.n)
        if info > 0:
            raise CertificationError(f"CG did not reach {CG_RTOL} relative residual in leverage estimation")
        X[i] = x
    R = np.einsum("ij,ij->j", X[:, G.u] - X[:, G.v], X[:, G.u] - X[:, G.v])
    return w * R, "jl"


def sparsify(G: WeightedGraph, gamma: float, seed: int = 0, *, c_s: float = C_S,
             dense_threshold: int = DENSE_THRESHOLD, jl_k: int | None = None,
             max_attempts: int = 8) -> SpectralSparsifier:
    """Leverage-score sampling with ``p_e = min(1, c_s w_e R_e ln n / gamma^2)``.

    Kept edges are reweighted by ``1/p_e``.  A draw that changes the component
    structure is redrawn; after ``max_attempts`` failures ``G`` itself is
    returned (flagged as ``fallback``).
    """
    if not 0 < gamma <= 1:
        raise PreconditionError("gamma must lie in (0, 1]")
    lev, mode = leverage_scores(G, derive_seed(seed, "leverage"), dense_threshold, jl_k)
    w = G.real_weights
    p = np.minimum(1.0, c_s * lev * math.log(max(G.n, 2)) / gamma**2)
    k0, lab0 = component_labels(G)
    for attempt in range(1, max_attempts + 1):
        rng = generator(seed, "sparsify", attempt)
        keep = (p >= 1.0) | (rng.random(G.m) < p)
        H = WeightedGraph.from_arrays(G.n, G.u[keep], G.v[keep], w[keep] / p[keep])
        k1, lab1 = component_labels(H)
        if k1 == k0 and np.array_equal(lab0, lab1):
            return SpectralSparsifier(H, float(gamma), float(c_s), mode, attempt)
    H = WeightedGraph.from_arrays(G.n, G.u, G.v, w.astype(np.float64))
    return SpectralSparsifier(H, float(gamma), float(c_s), mode, max_attempts, fallback=True)


# -- preconditioner -----------------------------------------------------------------


def _chebyshev_degree(lo: float, hi: float, eta: float) -> int:
    x = (hi + lo) / (hi - lo)
    return max(1, math.ceil(math.acosh(1 / eta) / math.acosh(x)))


@dataclass(eq=False)
class Preconditioner:
    """Symmetric ``N`` with ``1/2 N^+ <= L' <= 2 N^+`` on the range of ``L'``."""

    mode: str
    n: int
    labels: np.ndarray
    ncomp: int
    dense: np.ndarray | None = None
    lo: float = 0.0
    degree: int = 0
    measured: tuple[float, float] = (1.0, 1.0)
    _operands: tuple = field(default=(), repr=False)

    def _project(self, X):
        # per-component mean removal, for a vector or an n x k block
        sums = np.zeros((self.ncomp,) + X.shape[1:])
        np.add.at(sums, self.labels, X)
        sizes = np.bincount(self.labels, minlength=self.ncomp).astype(np.float64)
        sizes = sizes.reshape((-1,) + (1,) * (X.ndim - 1))
        return X - (sums / sizes)[self.labels]

    def apply(self, X: np.ndarray) -> np.ndarray:
        if self.mode == "dense":
            return self.dense @ X
        Nrm, dih, Q = self._operands
        scale = dih.reshape((-1,) + (1,) * (X.ndim - 1))

        def defl(Y):
            return Y - Q @ (Q.T @ Y)

        r = defl(scale * self._project(X))
        theta = (2.0 + self.lo) / 2
        delta = (2.0 - self.lo) / 2
        sigma = theta / delta
        rho = 1 / sigma
        z = np.zeros_like(r)
        d = r / theta
        for _ in range(self.degree):
            z = z + d
            r = r - Nrm @ d
            rho_next = 1 / (2 * sigma - rho)
            d = rho_next * rho * d + (2 * rho_next / delta) * r
            rho = rho_next
        return self._project(scale * defl(z))


def _poly_operands(Lp: WeightedGraph, labels: np.ndarray, k: int):
    d = Lp.degrees.astype(np.float64)
    dih = np.where(d > 0, 1 / np.sqrt(np.where(d > 0, d, 1.0)), 0.0)
    Nrm = (sp.diags(dih) @ Lp.laplacian() @ sp.diags(dih)).tocsr()
    q = np.sqrt(d)
    cols = []
    for c in range(k):
        col = np.where(labels == c, q, 0.0)
        nrm = np.linalg.norm(col)
        if nrm > 0:
            cols.append(col / nrm)
    Q = np.column_stack(cols) if cols else np.zeros((Lp.n, 0))
    return Nrm, dih, Q


def _lambda2_estimate(Nrm, Q, seed: int) -> float:
    n = Nrm.shape[0]
    if n - Q.shape[1] < 1:
        return 2.0
    X = generator(seed, "lobpcg").standard_normal((n, 1))
    vals = lobpcg(Nrm, X, Y=Q if Q.shape[1] else None, largest=False, tol=1e-6, maxiter=500)[0]
    return float(vals[0])


def _certify(Lsp, Nop: Preconditioner, labels, k, seed: int, probes: int) -> tuple[float, float]:
    rng = generator(seed, "certify")
    X = Nop._project(rng.standard_normal((Nop.n, probes)))
    LX = Lsp @ X
    num = np.einsum("ij,ij->j", LX, Nop.apply(LX))
    den = np.einsum("ij,ij->j", X, LX)
    ok = den > 1e-300
    ratios = num[ok] / den[ok]
    if ratios.size == 0:
        return 1.0, 1.0
    return float(ratios.min()), float(ratios.max())


def build_preconditioner(Lp: WeightedGraph, *, dense_threshold: int = DENSE_THRESHOLD,
                         seed: int = 0, probes: int = 64, eta: float = POLY_ETA) -> Preconditioner:
    """Dense pseudoinverse at or below ``dense_threshold`` vertices, otherwise a
    Chebyshev polynomial whose factor-2 sandwich is checked on ``probes`` random
    vectors.  Raises :class:`CertificationError` if the check keeps failing.
    """
    k, labels = component_labels(Lp)
    if Lp.n <= dense_threshold:
        P = _block_pinv(Lp.dense_laplacian(), labels, k)
        P = (P + P.T) / 2
        return Preconditioner("dense", Lp.n, labels, k, dense=P)
    Nrm, dih, Q = _poly_operands(Lp, labels, k)
    lo = 0.9 * _lambda2_estimate(Nrm, Q, seed)
    Lsp = Lp.laplacian()
    measured = (0.0, 0.0)
    for _ in range(6):
        lo = min(max(lo, 1e-8), 1.0)
        t = _chebyshev_degree(lo, 2.0, eta)
        N = Preconditioner("poly", Lp.n, labels, k, lo=lo, degree=t, _operands=(Nrm, dih, Q))
        measured = _certify(Lsp, N, labels, k, seed, probes)
        if measured[0] >= 0.5 and measured[1] <= 2.0:
            N.measured = measured
            return N
        lo /= 2
    raise CertificationError(
        f"polynomial preconditioner failed its sandwich check: factors {measured[0]:.4f}..{measured[1]:.4f}",
        measured=measured[0])


# -- solver operator ------------------------------------------------------------------


@dataclass(eq=False)
class SolverOperator:
    sparsifier: SpectralSparsifier
    N: Preconditioner
    z: int
    epsilon: float
    seed: int
    graph_hash: str
    _L: sp.csr_matrix = field(default=None, repr=False)

    def __post_init__(self):
        if self._L is None:
            self._L = self.sparsifier.graph.laplacian()

    @property
    def n(self) -> int:
        return self.sparsifier.graph.n

    @property
    def labels(self) -> np.ndarray:
        return self.N.labels

    @property
    def ncomp(self) -> int:
        return self.N.ncomp

    @property
    def certified(self) -> bool:
        """True when ``N`` is exact; the poly mode is only probe-certified."""
        return self.N.mode == "dense"

    def with_degree(self, z: int) -> "SolverOperator":
        return SolverOperator(self.sparsifier, self.N, int(z), self.epsilon, self.seed,
                              self.graph_hash, self._L)

    def apply(self, b, check: bool = True) -> np.ndarray:
        """``S b`` by Horner's rule; ``b`` must lie in the range unless ``check=False``.

        Also accepts an ``n x k`` block of right-hand sides (unchecked).
        """
        b = np.asarray(b, dtype=np.float64)
        if check:
            check_in_range(self.labels, self.ncomp, b)
        s = b
        for _ in range(self.z):
            s = b + s - 0.5 * (self._L @ self.N.apply(s))
        return 0.5 * self.N.apply(s)

    def matrix(self) -> np.ndarray:
        """Dense ``S``, materialized from the columns ``S e_i``."""
        S = self.apply(np.eye(self.n), check=False)
        return (S + S.T) / 2

    __call__ = apply

    # serialization: N is a deterministic function of L', so only its mode is stored
    def to_arrays(self) -> tuple[dict, dict[str, np.ndarray]]:
        H = self.sparsifier.graph
        meta = {"n": H.n, "z": self.z, "epsilon": self.epsilon, "seed": self.seed,
                "graph_hash": self.graph_hash, "gamma": self.sparsifier.gamma,
                "c_s": self.sparsifier.c_s, "leverage_mode": self.sparsifier.leverage_mode,
                "attempts": self.sparsifier.attempts, "fallback": self.sparsifier.fallback,
                "mode": self.N.mode, "lo": self.N.lo, "degree": self.N.degree,
                "measured": list(self.N.measured)}
        return meta, {"u": H.u, "v": H.v, "w": np.asarray(H.w, dtype=np.float64)}

    @classmethod
    def from_arrays(cls, meta: dict, a: dict[str, np.ndarray]) -> "SolverOperator":
        H = WeightedGraph(meta["n"], a["u"], a["v"], a["w"])
        spz = SpectralSparsifier(H, meta["gamma"], meta["c_s"], meta["leverage_mode"],
                                 meta["attempts"], meta["fallback"])
        k, labels = component_labels(H)
        if meta["mode"] == "dense":
            P = _block_pinv(H.dense_laplacian(), labels, k)
            N = Preconditioner("dense", H.n, labels, k, dense=(P + P.T) / 2)
        else:
            N = Preconditioner("poly", H.n, labels, k, lo=meta["lo"], degree=meta["degree"],
                               measured=tuple(meta["measured"]),
                               _operands=_poly_operands(H, labels, k))
        return cls(spz, N, meta["z"], meta["epsilon"], meta["seed"], meta["graph_hash"])

    def to_bytes(self) -> bytes:
        return container.pack("solver-operator", *self.to_arrays())

    @classmethod
    def from_bytes(cls, data: bytes) -> "SolverOperator":
        return cls.from_arrays(*container.unpack(data, "solver-operator"))


def apply_solver(S: SolverOperator, b) -> np.ndarray:
    return S.apply(b)


def build_solver_operator(G: WeightedGraph, epsilon: float, seed: int = 0, *,
                          c_s: float = C_S, dense_threshold: int = DENSE_THRESHOLD,
                          z_margin: int = Z_MARGIN, jl_k: int | None = None) -> SolverOperator:
    """Sparsify at ``gamma = sqrt(eps)/4`` and wrap the result in ``S``."""
    if not 0 < epsilon <= 1 / 16:
        raise PreconditionError(f"solver needs 0 < epsilon <= 1/16, got {epsilon}")
    gamma = math.sqrt(epsilon) / 4
    spz = sparsify(G, gamma, derive_seed(seed, "sparsifier"), c_s=c_s,
                   dense_threshold=dense_threshold, jl_k=jl_k)
    N = build_preconditioner(spz.graph, dense_threshold=dense_threshold,
                             seed=derive_seed(seed, "preconditioner"))
    return SolverOperator(spz, N, z_formula(epsilon) + z_margin, float(epsilon), int(seed),
                          G.content_hash())
