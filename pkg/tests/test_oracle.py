import math

import numpy as np
import pytest

from corpus import range_vectors, small_graphs, two_components
from lapsketch import generators as gen
from lapsketch.errors import DomainError, RangeViolation
from lapsketch.graph import WeightedGraph
from lapsketch.oracle import (DenseOracle, cheeger_check, dense_pinv_quadratic, exhaustive_conductance,
                              jl_baseline_resistances, jl_dimension, monte_carlo_stats,
                              normalized_lambda2)


@pytest.mark.parametrize("name", sorted(small_graphs()))
def test_pinv_identities(name):
    G = small_graphs()[name]
    o = DenseOracle(G)
    L, P = o.L, o.pinv
    assert np.allclose(L @ P @ L, L, atol=1e-9 * max(1.0, np.abs(L).max()))
    assert np.allclose(P, P.T)
    assert np.allclose(o.resistances(), o.incidence_resistances(), rtol=1e-9, atol=1e-12)


def test_resistance_examples():
    assert DenseOracle(gen.clique(3)).resistances()[0, 1] == pytest.approx(2 / 3)
    assert DenseOracle(gen.clique(4)).resistances()[0, 1] == pytest.approx(1 / 2)
    R = DenseOracle(gen.cycle(6)).resistances()
    assert R[0, 1] == pytest.approx(5 / 6) and R[0, 3] == pytest.approx(1.5)
    assert DenseOracle(gen.path(2)).resistances()[0, 1] == pytest.approx(1.0)
    W = DenseOracle(WeightedGraph.from_edges(2, [(0, 1, 4)]))
    assert W.resistances()[0, 1] == pytest.approx(0.25)


def test_components_and_range():
    o = DenseOracle(two_components())
    assert o.ncomp == 3
    R = o.resistances()
    assert math.isinf(R[0, 4]) and R[7, 7] == 0
    with pytest.raises(RangeViolation):
        o.pinv_quadratic(np.eye(8)[0])
    b = range_vectors(two_components(), 1, np.random.default_rng(0))[0]
    assert dense_pinv_quadratic(two_components(), b) == pytest.approx(b @ o.pinv @ b)


def test_conductance_examples():
    assert exhaustive_conductance(gen.path(3)) == 1.0
    assert exhaustive_conductance(gen.clique(4)) == pytest.approx(2 / 3)
    assert exhaustive_conductance(gen.cycle(8)) == pytest.approx(2 / 8)
    assert exhaustive_conductance(gen.dumbbell(5)) == pytest.approx(1 / 21)
    with pytest.raises(DomainError):
        exhaustive_conductance(gen.path(23))


@pytest.mark.parametrize("G", [gen.clique(6), gen.cycle(10), gen.petersen(), gen.dumbbell(5),
                               gen.random_regular(16, 3, seed=1)])
def test_cheeger_inequality(G):
    lam, phi, ok = cheeger_check(G)
    assert ok and lam <= 2 * phi + 1e-12
    assert lam == pytest.approx(normalized_lambda2(G))


def test_cheeger_requires_connected():
    with pytest.raises(DomainError):
        cheeger_check(two_components())


def test_jl_dimension_examples():
    assert jl_dimension(40, 0.5) == math.ceil(24 * math.log(40) / 0.25)
    assert jl_dimension(1, 0.5) == jl_dimension(2, 0.5)


def test_jl_orthonormal_is_exact():
    G = gen.weighted_random(20, 0.3, seed=2)
    base = jl_baseline_resistances(G, 0.5, seed=3, k=G.m, orthonormal=True)
    assert np.allclose(base.R, DenseOracle(G).resistances(), rtol=1e-9)
    with pytest.raises(DomainError):
        jl_baseline_resistances(G, 0.5, k=G.m - 1, orthonormal=True)


def test_jl_random_projection_accuracy_and_storage():
    G = gen.erdos_renyi(40, 0.3, seed=4)
    eps = 0.5
    base = jl_baseline_resistances(G, eps, seed=5)
    exact = DenseOracle(G).resistances()
    off = ~np.eye(40, dtype=bool)
    assert np.mean(np.abs(base.R[off] / exact[off] - 1) <= eps) >= 0.99
    assert base.stored_floats == base.k * 40 and base.stored_bytes == 8 * base.k * 40


def test_monte_carlo_constant_and_rows():
    st = monte_carlo_stats(lambda s: (lambda x: 3.0), np.zeros(2), trials=10)
    assert st.mean == 3.0 and st.variance == 0.0 and st.stderr == 0.0
    xs = np.arange(6.0).reshape(3, 2)
    st = monte_carlo_stats(lambda s: (lambda x: x.sum() + s % 2), xs, trials=100)
    assert np.allclose(st.mean, xs.sum(axis=1) + 0.5)
    batched = monte_carlo_stats(lambda s: (lambda X: X.sum(axis=1) + s % 2), xs, trials=100,
                                batched=True)
    assert np.array_equal(batched.mean, st.mean) and np.array_equal(batched.variance, st.variance)
    with pytest.raises(DomainError):
        monte_carlo_stats(lambda s: (lambda x: 0.0), np.zeros(2), trials=1)
