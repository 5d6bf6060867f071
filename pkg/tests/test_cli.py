import json

import numpy as np
import pytest

from lapsketch import generators as gen
from lapsketch.cli import EXIT_IO, EXIT_PRECONDITION, main
from lapsketch.graph import quadratic_form, read_edge_list, write_edge_list
from lapsketch.oracle import DenseOracle


def _edges(path):
    return [l for l in path.read_text().splitlines() if l.strip() and not l.startswith("#")]


def test_gen_examples(tmp_path):
    out = tmp_path / "k4.tsv"
    assert main(["gen", "clique", "4", "--out", str(out)]) == 0
    assert len(_edges(out)) == 6
    assert main(["gen", "path", "3", "--out", str(out)]) == 0
    assert len(_edges(out)) == 2


def test_gen_seeded_determinism(tmp_path):
    a, b, c = (tmp_path / f"{k}.tsv" for k in "abc")
    main(["gen", "erdos-renyi", "30", "0.2", "--seed", "4", "--out", str(a)])
    main(["gen", "erdos-renyi", "30", "0.2", "--seed", "4", "--out", str(b)])
    main(["gen", "erdos-renyi", "30", "0.2", "--seed", "5", "--out", str(c)])
    assert a.read_text() == b.read_text() != c.read_text()


def test_gen_stdout(capsys):
    assert main(["gen", "cycle", "5"]) == 0
    assert len([l for l in capsys.readouterr().out.splitlines() if l and l[0] != "#"]) == 5


def test_exit_codes(tmp_path, capsys):
    assert main(["sketch", "build", "--input", str(tmp_path / "none.tsv"),
                 "--out", str(tmp_path / "x")]) == EXIT_IO
    bad = tmp_path / "bad.tsv"
    bad.write_text("0 0\n")
    assert main(["sketch", "build", "--input", str(bad), "--out", str(tmp_path / "x")]) == EXIT_IO
    g = tmp_path / "p.tsv"
    write_edge_list(gen.path(100), g)
    assert main(["pinv", "build", "--input", str(g), "--out", str(tmp_path / "p.bin"),
                 "--eps", "0.5"]) == EXIT_PRECONDITION
    assert "error" in capsys.readouterr().err


def test_sketch_build_query_round_trip(tmp_path, capsys):
    G = gen.weighted_random(25, 0.3, seed=1)
    g, out, vec = tmp_path / "g.tsv", tmp_path / "g.sk", tmp_path / "x.txt"
    write_edge_list(G, g)
    assert main(["sketch", "build", "--input", str(g), "--out", str(out), "--json", "--seed", "3"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["n"] == 25 and summary["exact"]
    first = out.read_bytes()
    assert main(["sketch", "build", "--input", str(g), "--out", str(out), "--seed", "3"]) == 0
    assert out.read_bytes() == first
    assert json.loads((tmp_path / "g.sk.json").read_text())["meta"]["n"] == 25
    x = np.random.default_rng(2).standard_normal(25)
    vec.write_text("\n".join(repr(float(v)) for v in x))
    capsys.readouterr()
    assert main(["sketch", "query", "--sketch", str(out), "--vec", str(vec)]) == 0
    H = read_edge_list(g)
    assert H.labels == tuple(str(i) for i in range(25))  # numeric labels keep their ids
    assert float(capsys.readouterr().out) == pytest.approx(quadratic_form(H, x), rel=1e-9)


def test_pinv_build_query_resistance(tmp_path, capsys):
    G = gen.erdos_renyi(20, 0.4, seed=5)
    g, out = tmp_path / "g.tsv", tmp_path / "g.psk"
    write_edge_list(G, g)
    assert main(["pinv", "build", "--input", str(g), "--out", str(out), "--eps", "0.2"]) == 0
    meta = json.loads(capsys.readouterr().out)
    assert meta["z"] >= 17 and meta["eps_internal"] == pytest.approx(0.05)
    assert main(["pinv", "resistance", "--sketch", str(out), "--u", "0", "--v", "1",
                 "--labels", str(out) + ".labels"]) == 0
    r = float(capsys.readouterr().out)
    H = read_edge_list(g)
    i, j = H.labels.index("0"), H.labels.index("1")
    assert r == pytest.approx(DenseOracle(H).resistances()[i, j], rel=0.2)
    vec = tmp_path / "b.txt"
    vec.write_text("\n".join(["1.0"] + ["0.0"] * 19))
    assert main(["pinv", "query", "--sketch", str(out), "--vec", str(vec)]) == EXIT_PRECONDITION
    assert main(["pinv", "query", "--sketch", str(out), "--vec", str(vec), "--project-range"]) == 0


def test_allpairs_tsv_and_npy(tmp_path, capsys):
    g = tmp_path / "g.tsv"
    write_edge_list(gen.path(5), g)
    out = tmp_path / "r.tsv"
    assert main(["allpairs", "--input", str(g), "--out", str(out), "--copies", "3"]) == 0
    rows = _edges(out)
    assert len(rows) == 10
    stats = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert stats["copies"] == 3
    pairs = tmp_path / "pairs.txt"
    pairs.write_text("0 4\n")
    assert main(["allpairs", "--input", str(g), "--pairs-file", str(pairs), "--copies", "1"]) == 0
    u, v, r = capsys.readouterr().out.split()
    assert {u, v} == {"0", "4"} and float(r) == pytest.approx(4.0, rel=0.25)
    npy = tmp_path / "r.npy"
    assert main(["allpairs", "--input", str(g), "--out", str(npy), "--format", "npy", "--copies", "1"]) == 0
    assert np.load(npy).shape == (5, 5)
    assert main(["allpairs", "--input", str(g), "--copies", "2"]) == EXIT_PRECONDITION


def test_bench_report(tmp_path):
    out = tmp_path / "bench.json"
    assert main(["bench", "--gen", "erdos-renyi", "40", "0.2", "--eps-list", "0.5", "0.25",
                 "--queries", "10", "--allpairs", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["n"] == 40 and len(rep["sketch"]) == 2
    assert rep["pinv"]["rel_error"]["p100"] <= 0.25
    assert rep["allpairs"]["rel_error"]["p100"] <= 0.25


def test_bench_empty_graph(tmp_path):
    g, out = tmp_path / "empty.tsv", tmp_path / "bench.json"
    g.write_text("# nothing\n")
    assert main(["bench", "--input", str(g), "--queries", "2", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["n"] == 0 and all(e["item_count"] == 0 for e in rep["sketch"])


def test_oracle_compare(tmp_path):
    g, out = tmp_path / "g.tsv", tmp_path / "cmp.json"
    write_edge_list(gen.petersen(), g)
    assert main(["oracle", "compare", "--input", str(g), "--queries", "20", "--eps", "0.2",
                 "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["cheeger"]["holds"] and rep["pinv"]["within_eps"] == 1.0
    assert rep["jl_baseline"]["stored_floats"] > 0


def test_threads_env(tmp_path, monkeypatch):
    g = tmp_path / "g.tsv"
    write_edge_list(gen.cycle(6), g)
    monkeypatch.setenv("LAPSKETCH_THREADS", "2")
    a, b = tmp_path / "a.npy", tmp_path / "b.npy"
    assert main(["allpairs", "--input", str(g), "--format", "npy", "--out", str(a), "--copies", "3"]) == 0
    assert main(["allpairs", "--input", str(g), "--format", "npy", "--out", str(b), "--copies", "3",
                 "--threads", "1"]) == 0
    assert np.array_equal(np.load(a), np.load(b))
