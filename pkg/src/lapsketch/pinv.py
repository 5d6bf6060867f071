"""Pseudoinverse sketches: an approximate solver paired with a Laplacian sketch.

For ``b`` in the range of ``L``, ``q(z) = 2 b.z - z^T L z`` is maximized at
``z = L^+ b`` with value ``b^T L^+ b``, and ``q(x) - q(z) = (x - z)^T L (x - z)``.
So ``y = S b`` from a good solver makes ``q(y)`` close to ``b^T L^+ b``, and
replacing the exact ``y^T L y`` with a sketch estimate costs only a relative
error in ``y^T L y <= 2 b^T L^+ b``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import container
from .errors import DimensionError, PreconditionError
from .graph import WeightedGraph, _check_vector, check_in_range, project_to_range, quadratic_form
from .rng import derive_seed
from .sketch import LaplacianSketch, boosted_eval, build_sketch
from .solver import DENSE_THRESHOLD, SolverOperator, build_solver_operator

EPS_SCALE = 4


def q_form(G: WeightedGraph, b, zv) -> float:
    """``2 b^T z - z^T L_G z``."""
    b = _check_vector(G, b)
    zv = _check_vector(G, zv)
    return 2 * math.fsum(b * zv) - quadratic_form(G, zv)


@dataclass(frozen=True, eq=False)
class PseudoinverseSketch:
    solver: SolverOperator
    sketches: tuple[LaplacianSketch, ...]
    epsilon: float
    eps_internal: float
    seed: int
    graph_hash: str

    def __post_init__(self):
        hashes = {self.solver.graph_hash, *(s.graph_hash for s in self.sketches)}
        if hashes != {self.graph_hash}:
            raise PreconditionError("solver and sketches were built from different graphs")

    @property
    def n(self) -> int:
        return self.solver.n

    @property
    def certified(self) -> bool:
        return self.solver.certified

    def __call__(self, b, project_range: bool = False) -> float:
        return eval_pinv_sketch(self, b, project_range)

    def to_bytes(self) -> bytes:
        smeta, sarr = self.solver.to_arrays()
        meta = {"epsilon": self.epsilon, "eps_internal": self.eps_internal, "seed": self.seed,
                "graph_hash": self.graph_hash, "solver": smeta, "sketches": []}
        arrays = {f"solver/{k}": v for k, v in sarr.items()}
        for c, sk in enumerate(self.sketches):
            m, a = sk.to_arrays()
            meta["sketches"].append(m)
            arrays.update({f"lap{c}/{k}": v for k, v in a.items()})
        return container.pack("pinv-sketch", meta, arrays)

    @classmethod
    def from_bytes(cls, data: bytes) -> "PseudoinverseSketch":
        meta, arrays = container.unpack(data, "pinv-sketch")

        def sub(prefix):
            return {k[len(prefix):]: v for k, v in arrays.items() if k.startswith(prefix)}

        solver = SolverOperator.from_arrays(meta["solver"], sub("solver/"))
        sks = tuple(LaplacianSketch.from_arrays(m, sub(f"lap{c}/"))
                    for c, m in enumerate(meta["sketches"]))
        return cls(solver, sks, meta["epsilon"], meta["eps_internal"], meta["seed"],
                   meta["graph_hash"])


def build_pinv_sketch(G: WeightedGraph, epsilon: float, seed: int = 0, *, copies: int = 1,
                      c_alpha: float = 1.0, alpha: int | None = None, c_s: float = 9.0,
                      dense_threshold: int = DENSE_THRESHOLD, phi_target: float | None = None,
                      round_cap: int | None = None) -> PseudoinverseSketch:
    """Solver and ``copies`` Laplacian sketches, all at ``epsilon / 4``."""
    if epsilon <= 0:
        raise PreconditionError("epsilon must be positive")
    if copies < 1:
        raise PreconditionError("copies must be >= 1")
    eps_i = epsilon / EPS_SCALE
    if eps_i > 1 / 16:
        raise PreconditionError(
            f"epsilon {epsilon} gives an internal accuracy {eps_i} above the solver limit 1/16; "
            f"use epsilon <= {EPS_SCALE / 16}")
    solver = build_solver_operator(G, eps_i, derive_seed(seed, "solver"), c_s=c_s,
                                   dense_threshold=dense_threshold)
    sks = tuple(build_sketch(G, eps_i, derive_seed(seed, "lap", c), c_alpha=c_alpha, alpha=alpha,
                             phi_target=phi_target, round_cap=round_cap)
                for c in range(copies))
    return PseudoinverseSketch(solver, sks, float(epsilon), eps_i, int(seed), G.content_hash())


def eval_pinv_sketch(psk: PseudoinverseSketch, b, project_range: bool = False) -> float:
    """``2 b^T y - f(y)`` with ``y = S b`` and ``f`` the (median) sketch value."""
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (psk.n,):
        raise DimensionError(f"expected a vector of length {psk.n}, got shape {b.shape}")
    if project_range:
        b = project_to_range(psk.solver.labels, psk.solver.ncomp, b)
    else:
        check_in_range(psk.solver.labels, psk.solver.ncomp, b)
    y = psk.solver.apply(b, check=False)
    return 2 * math.fsum(b * y) - boosted_eval(psk.sketches, y)


def resistance_query(psk: PseudoinverseSketch, u: int, v: int) -> float:
    """Effective resistance estimate from ``b = chi_u - chi_v``; ``inf`` across components."""
    n = psk.n
    if not (0 <= u < n and 0 <= v < n):
        raise DimensionError(f"vertex ids must lie in [0, {n})")
    if u == v:
        return 0.0
    lab = psk.solver.labels
    if lab[u] != lab[v]:
        return math.inf
    b = np.zeros(n)
    b[u], b[v] = 1.0, -1.0
    return eval_pinv_sketch(psk, b)
