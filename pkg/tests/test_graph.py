import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from corpus import random_small_weighted
from lapsketch import generators as gen
from lapsketch.errors import DimensionError, DomainError, IngestError, RangeViolation
from lapsketch.graph import (CutSpec, WeightedGraph, bit_bucket, check_in_range, component_labels,
                             connected_components, cut_conductance, format_edge_list,
                             induced_subgraph, parse_edge_list, quadratic_form, read_edge_list,
                             read_label_map, write_label_map)


def test_quadratic_form_examples():
    assert quadratic_form(WeightedGraph.from_edges(2, [(0, 1)]), [1, 0]) == 1
    assert quadratic_form(gen.clique(3), [1, 0, 0]) == 2
    G = gen.weighted_random(30, 0.3, seed=1)
    assert quadratic_form(G, np.full(30, 3.7)) == 0


def test_quadratic_form_dimension():
    with pytest.raises(DimensionError):
        quadratic_form(gen.path(3), [1, 2])


def test_ingest_merges_and_rejects():
    G = WeightedGraph.from_edges(3, [(0, 1, 2), (1, 0, 3), (1, 2)])
    assert G.m == 2 and G.w.tolist() == [5, 1]
    with pytest.raises(IngestError):
        WeightedGraph.from_edges(3, [(1, 1)])
    with pytest.raises(IngestError):
        WeightedGraph.from_edges(3, [(0, 3)])
    with pytest.raises(IngestError):
        WeightedGraph.from_edges(3, [(0, 1, -2)])
    with pytest.raises(IngestError):
        WeightedGraph.from_edges(3, [(0, 1, 82)])  # above 3**4


def test_decimal_weights_are_scaled_with_warning():
    with pytest.warns(UserWarning, match="scaled by 2\\*\\*16"):
        G = WeightedGraph.from_edges(3, [(0, 1, 0.5), (1, 2, 1.25)])
    assert G.scale == 2**16 and G.is_integer
    assert quadratic_form(G, [1, 0, 0]) == 0.5
    assert G.real_weights.tolist() == [0.5, 1.25]


def test_bit_bucket_examples():
    lv = bit_bucket(WeightedGraph.from_edges(2, [(0, 1, 5)]))
    assert [l.level for l in lv] == [1, 3]
    one = bit_bucket(gen.clique(5))
    assert len(one) == 1 and one[0].level == 1 and one[0].graph.m == 10


def test_bit_bucket_rejects_real_weights():
    H = WeightedGraph.from_arrays(2, [0], [1], [0.5])
    with pytest.raises(IngestError):
        bit_bucket(H)


def test_bit_bucket_reconstruction_1000():
    rng = np.random.default_rng(0)
    worst = 0.0
    for i in range(1000):
        if i % 10 == 0:
            G = random_small_weighted(rng, 2, 25, max_weight=1000)
            levels = bit_bucket(G)
        x = rng.standard_normal(G.n)
        recon = math.fsum(math.ldexp(quadratic_form(l.graph, x), l.level - 1) for l in levels)
        exact = quadratic_form(G, x)
        worst = max(worst, abs(recon - exact) / max(exact, 1e-300))
    assert worst <= 1e-9


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 12), st.lists(st.tuples(st.integers(0, 11), st.integers(0, 11),
                                              st.integers(1, 60)), min_size=1, max_size=40),
       st.lists(st.floats(-100, 100), min_size=12, max_size=12))
def test_quadratic_form_psd_and_kernel(n, raw, xs):
    # one weight per pair, capped so merged weights stay within n**4
    edges = list({(min(a % n, b % n), max(a % n, b % n)): min(w, n**4)
                  for a, b, w in raw if a % n != b % n}.items())
    edges = [(u, v, w) for (u, v), w in edges]
    G = WeightedGraph.from_edges(n, edges)
    x = np.array(xs[:n])
    assert quadratic_form(G, x) >= 0
    k, lab = component_labels(G)
    c = np.arange(k, dtype=float)[lab] * 3.0
    assert quadratic_form(G, c) == 0


def test_cut_conductance_examples():
    assert cut_conductance(gen.cycle(4), CutSpec.of([0, 1])) == 0.5
    assert cut_conductance(gen.clique(4), CutSpec.of([0])) == 1
    assert cut_conductance(gen.star(3), CutSpec.of([1])) == 1
    with pytest.raises(DomainError):
        cut_conductance(gen.path(3), CutSpec.of([]))
    with pytest.raises(DomainError):
        cut_conductance(gen.path(3), CutSpec.of([0, 1, 2]))
    iso = WeightedGraph.from_edges(3, [(0, 1)])
    assert cut_conductance(iso, CutSpec.of([2])) == math.inf


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), st.data())
def test_cut_conductance_symmetric(seed, data):
    G = random_small_weighted(np.random.default_rng(seed), 3, 14)
    S = data.draw(st.sets(st.integers(0, G.n - 1), min_size=1, max_size=G.n - 1))
    comp = set(range(G.n)) - S
    assert cut_conductance(G, CutSpec.of(S)) == cut_conductance(G, CutSpec.of(comp))


def test_connected_components_examples():
    assert [c.tolist() for c in connected_components(WeightedGraph.from_edges(3, []))] == [[0], [1], [2]]
    assert [c.tolist() for c in connected_components(gen.path(3))] == [[0, 1, 2]]
    G = WeightedGraph.from_edges(4, [(2, 3), (0, 1)])
    assert [c.tolist() for c in connected_components(G)] == [[0, 1], [2, 3]]
    G = WeightedGraph.from_edges(5, [(3, 4), (1, 0), (2, 4)])
    assert [c.tolist() for c in connected_components(G)] == [[0, 1], [2, 3, 4]]


def test_induced_subgraph_examples():
    H, m = induced_subgraph(gen.clique(3), [0, 1])
    assert H.n == 2 and H.m == 1 and m.tolist() == [0, 1]
    G = gen.weighted_random(10, 0.5, seed=2)
    H, m = induced_subgraph(G, range(10))
    assert m.tolist() == list(range(10)) and np.array_equal(H.w, G.w)
    H, m = induced_subgraph(G, [4])
    assert H.n == 1 and H.m == 0 and m.tolist() == [4]


def test_range_check_names_component():
    k, lab = component_labels(WeightedGraph.from_edges(4, [(0, 1), (2, 3)]))
    check_in_range(lab, k, np.array([1.0, -1.0, 2.0, -2.0]))
    with pytest.raises(RangeViolation) as ei:
        check_in_range(lab, k, np.array([1.0, -1.0, 2.0, -1.0]))
    assert ei.value.component == 1 and ei.value.residual == pytest.approx(1.0)


def test_edge_list_round_trip(tmp_path):
    text = "# comment\nb a 2\na c\nc b 1  # trailing\n"
    G = parse_edge_list(text)
    assert G.labels == ("a", "b", "c") and G.m == 3
    p = tmp_path / "g.tsv"
    p.write_text(format_edge_list(G))
    H = read_edge_list(p)
    assert np.array_equal(H.u, G.u) and np.array_equal(H.w, G.w) and H.labels == G.labels
    write_label_map(G, tmp_path / "g.labels")
    assert read_label_map(tmp_path / "g.labels") == ["a", "b", "c"]


def test_numeric_labels_keep_ids():
    G = parse_edge_list("10 2\n2 1\n")
    assert G.labels == ("1", "2", "10")


def test_edge_list_errors(tmp_path):
    with pytest.raises(IngestError):
        parse_edge_list("0 1 2 3\n")
    with pytest.raises(IngestError):
        parse_edge_list("0 1 heavy\n")
    with pytest.raises(FileNotFoundError):
        read_edge_list(tmp_path / "missing.tsv")


def test_decimal_edge_list_scaled():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        G = parse_edge_list("0 1 0.1\n1 2 3\n")
    assert G.scale == 2**16
    assert quadratic_form(G, [1, 0, 0]) == pytest.approx(0.1, rel=1e-4)


def test_content_hash_distinguishes():
    a, b = gen.path(5), gen.path(5)
    assert a.content_hash() == b.content_hash()
    assert a.content_hash() != gen.cycle(5).content_hash()
