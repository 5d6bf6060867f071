import math

import numpy as np
import pytest
import scipy.linalg as sl

from corpus import range_vectors, small_graphs, two_components
from lapsketch import generators as gen
from lapsketch.errors import PreconditionError, RangeViolation
from lapsketch.graph import WeightedGraph, component_labels
from lapsketch.oracle import DenseOracle
from lapsketch.solver import (SolverOperator, apply_solver, build_preconditioner,
                              build_solver_operator, leverage_scores, sparsify, z_formula)


def generalized_range(G: WeightedGraph, H: WeightedGraph) -> tuple[float, float]:
    """Extreme eigenvalues of L_H relative to L_G on the range of L_G (connected G)."""
    vals, vecs = np.linalg.eigh(G.dense_laplacian())
    V = vecs[:, 1:]
    e = sl.eigh(V.T @ H.dense_laplacian() @ V, V.T @ G.dense_laplacian() @ V, eigvals_only=True)
    return float(e.min()), float(e.max())


def operator_matrix(apply, n):
    return np.column_stack([apply(col) for col in np.eye(n)])


def test_z_formula():
    assert z_formula(1 / 16) == 17
    S = build_solver_operator(gen.path(5), 1 / 16)
    assert S.z == 19


def test_precondition_guard():
    with pytest.raises(PreconditionError):
        build_solver_operator(gen.path(100), 0.25)
    with pytest.raises(PreconditionError):
        sparsify(gen.path(4), 0.0)


def test_tree_is_kept_verbatim():
    T = gen.path(30)
    lev, _ = leverage_scores(T)
    assert np.allclose(lev, 1.0)
    spz = sparsify(T, 0.9, seed=1)
    assert spz.graph.m == T.m and np.allclose(spz.graph.w, 1.0)


def test_all_probabilities_one_gives_identity():
    G = gen.weighted_random(30, 0.3, seed=2)
    spz = sparsify(G, 1 / 16, seed=3)
    assert np.array_equal(spz.graph.u, G.u) and np.allclose(spz.graph.w, G.real_weights)


def test_k32_sparsifier_drops_edges_and_sandwiches():
    K = gen.clique(32)
    gamma = 0.5
    ok = 0
    for s in range(10):
        spz = sparsify(K, gamma, seed=s, c_s=1.0)
        assert spz.graph.m < 496
        lo, hi = generalized_range(K, spz.graph)
        ok += (1 / (1 + gamma) <= lo) and (hi <= 1 + gamma)
    assert ok >= 9


def test_sparsifier_sandwich_default_gamma():
    gamma = math.sqrt(1 / 16) / 4
    for name, G in small_graphs().items():
        if component_labels(G)[0] != 1:
            continue
        good = 0
        for s in range(10):
            spz = sparsify(G, gamma, seed=s)
            lo, hi = generalized_range(G, spz.graph)
            good += (1 / (1 + gamma) <= lo + 1e-9) and (hi <= 1 + gamma + 1e-9)
        assert good >= 9, name


def test_sparsifier_keeps_components():
    G = two_components()
    spz = sparsify(G, 0.9, seed=4, c_s=0.5)
    assert np.array_equal(component_labels(spz.graph)[1], component_labels(G)[1])


def test_jl_leverage_estimates():
    G = gen.erdos_renyi(60, 0.2, seed=5)
    exact, m1 = leverage_scores(G)
    est, m2 = leverage_scores(G, seed=6, dense_threshold=0)
    assert (m1, m2) == ("dense", "jl")
    assert np.median(np.abs(est / exact - 1)) < 0.1
    assert est.sum() == pytest.approx(G.n - 1, rel=0.05)


def test_preconditioner_single_edge():
    N = build_preconditioner(WeightedGraph.from_arrays(2, [0], [1], [1.0]))
    assert np.allclose(N.dense, 0.25 * np.array([[1, -1], [-1, 1]]))


def test_preconditioner_dense_k8_factors():
    K = gen.clique(8)
    N = build_preconditioner(K)
    e = np.linalg.eigvals(N.dense @ K.dense_laplacian()).real
    nz = np.sort(e)[1:]
    assert np.all((0.5 <= nz) & (nz <= 2))


def test_preconditioner_block_diagonal():
    G = two_components()
    for thr in (2048, 0):
        N = build_preconditioner(G, dense_threshold=thr)
        Nm = operator_matrix(N.apply, G.n)
        lab = component_labels(G)[1]
        cross = lab[:, None] != lab[None, :]
        assert np.abs(Nm[cross]).max() <= 1e-12


@pytest.mark.parametrize("name", ["cycle12", "dumbbell8", "er64", "rr64", "weighted40", "star15"])
def test_poly_preconditioner_full_eigenbasis(name):
    G = small_graphs()[name]
    N = build_preconditioner(G, dense_threshold=0, seed=1)
    assert N.mode == "poly"
    Nm = operator_matrix(N.apply, G.n)
    Nm = (Nm + Nm.T) / 2
    L = G.dense_laplacian()
    vals, vecs = np.linalg.eigh(L)
    V = vecs[:, 1:] * np.sqrt(vals[1:])
    e = np.linalg.eigvalsh(V.T @ Nm @ V)
    assert 0.5 <= e.min() and e.max() <= 2.0


@pytest.mark.parametrize("thr", [2048, 0])
def test_solver_symmetry_and_range(thr):
    G = gen.weighted_random(50, 0.15, seed=7)
    S = build_solver_operator(G, 1 / 16, seed=8, dense_threshold=thr)
    rng = np.random.default_rng(9)
    k, lab = component_labels(G)
    for _ in range(100):
        a, b = rng.standard_normal(G.n), rng.standard_normal(G.n)
        Sa, Sb = S.apply(a, check=False), S.apply(b, check=False)
        assert abs(a @ Sb - b @ Sa) <= 1e-8 * np.linalg.norm(a) * np.linalg.norm(b)
        sums = np.bincount(lab, weights=Sb, minlength=k)
        assert np.abs(sums).max() <= 1e-8 * max(1.0, np.linalg.norm(Sb))


def test_apply_examples():
    E = WeightedGraph.from_edges(2, [(0, 1)])
    S = build_solver_operator(E, 1 / 16)
    assert np.array_equal(apply_solver(S, np.zeros(2)), np.zeros(2))
    y = apply_solver(S, np.array([1.0, -1.0]))
    d = y - np.array([0.5, -0.5])
    assert math.sqrt(d @ E.dense_laplacian() @ d) <= math.sqrt(1 / 16) * math.sqrt(0.5)
    K = gen.clique(16)
    S = build_solver_operator(K, 1 / 16, seed=3)
    P = DenseOracle(K).pinv
    r = math.sqrt(1 / 16)
    for b in range_vectors(K, 50, np.random.default_rng(10)):
        q = (b @ S(b)) / (b @ P @ b)
        assert 1 / (1 + r) <= q <= 1 + r


def test_range_violation_names_component():
    S = build_solver_operator(two_components(), 1 / 16)
    b = np.zeros(8)
    b[3] = 1.0
    with pytest.raises(RangeViolation) as ei:
        S(b)
    assert ei.value.component == 1


@pytest.mark.parametrize("thr", [2048, 0])
def test_poly_and_dense_sandwich_n64(thr):
    eps = 1 / 16
    r = math.sqrt(eps)
    rng = np.random.default_rng(11)
    for name in ("er64", "rr64", "petersen", "weighted40"):
        G = small_graphs()[name]
        S = build_solver_operator(G, eps, seed=12, dense_threshold=thr)
        P = DenseOracle(G).pinv
        B = range_vectors(G, 1000, rng)
        q = np.einsum("ij,ij->i", B, S.apply(B.T, check=False).T) / np.einsum("ij,ij->i", B, B @ P)
        assert 1 / (1 + r) <= q.min() and q.max() <= 1 + r


@pytest.mark.parametrize("thr", [2048, 0])
def test_truncation_geometry(thr):
    G = gen.erdos_renyi(40, 0.2, seed=13)
    base = build_solver_operator(G, 1 / 16, seed=14, dense_threshold=thr)
    Lpinv = DenseOracle(base.sparsifier.graph).pinv
    B = range_vectors(G, 200, np.random.default_rng(15))

    def err(S):
        Y = S.apply(B.T, check=False).T
        return np.max(np.abs(np.einsum("ij,ij->i", B, B @ Lpinv) - np.einsum("ij,ij->i", B, Y)))

    for z in (3, 6):
        e1, e2 = err(base.with_degree(z)), err(base.with_degree(2 * z))
        assert e2 <= (3 / 4) ** z * e1


@pytest.mark.parametrize("thr", [2048, 0])
def test_serialization_round_trip(thr):
    G = gen.weighted_random(40, 0.2, seed=16)
    S = build_solver_operator(G, 1 / 16, seed=17, dense_threshold=thr)
    data = S.to_bytes()
    T = SolverOperator.from_bytes(data)
    assert T.to_bytes() == data
    b = range_vectors(G, 1, np.random.default_rng(18))[0]
    assert np.array_equal(T(b), S(b))


def test_deterministic_build():
    G = gen.erdos_renyi(50, 0.2, seed=19)
    a = build_solver_operator(G, 1 / 20, seed=5)
    b = build_solver_operator(G, 1 / 20, seed=5)
    assert a.to_bytes() == b.to_bytes()
