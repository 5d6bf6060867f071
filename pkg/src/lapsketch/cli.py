"""Command-line interface.

Exit codes: 0 success, 2 I/O or malformed input, 3 precondition violated,
4 a built object failed its self-certification.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import generators
from .allpairs import all_pairs_resistances
from .errors import CertificationError, IngestError, LapSketchError, PreconditionError
from .graph import (WeightedGraph, component_labels, project_to_range, quadratic_form,
                    read_edge_list, read_label_map, read_vector, write_edge_list, write_label_map)
from .pinv import PseudoinverseSketch, build_pinv_sketch, eval_pinv_sketch, resistance_query
from .rng import generator
from .sketch import LaplacianSketch, build_sketch, eval_sketch
from .solver import DENSE_THRESHOLD

EXIT_IO = 2
EXIT_PRECONDITION = 3
EXIT_CERTIFICATION = 4


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    eps: float = 0.25
    seed: int = 0
    copies: int | None = None
    phi_target: float | None = None
    c_alpha: float = 1.0
    dense_threshold: int = DENSE_THRESHOLD
    out: str | None = None
    fmt: str = "tsv"
    threads: int = 1

    def validate(self) -> "RunConfig":
        if not self.eps > 0:
            raise PreconditionError("--eps must be positive")
        if not 0 <= self.seed < 2**64:
            raise PreconditionError("--seed must be a 64-bit unsigned integer")
        if self.copies is not None and (self.copies < 1 or self.copies % 2 == 0):
            raise PreconditionError("--copies must be a positive odd integer")
        if self.c_alpha <= 0:
            raise PreconditionError("--c-alpha must be positive")
        if self.threads < 1:
            raise PreconditionError("--threads must be >= 1")
        return self


def _threads(arg: int | None) -> int:
    if arg is not None:
        return arg
    env = os.environ.get("LAPSKETCH_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise PreconditionError(f"LAPSKETCH_THREADS={env!r} is not an integer") from None
    return 1


def _config(args) -> RunConfig:
    return RunConfig(
        command=args.command,
        input=getattr(args, "input", None),
        eps=getattr(args, "eps", 0.25),
        seed=getattr(args, "seed", 0),
        copies=getattr(args, "copies", None),
        phi_target=getattr(args, "phi_target", None),
        c_alpha=getattr(args, "c_alpha", 1.0),
        dense_threshold=getattr(args, "dense_threshold", DENSE_THRESHOLD),
        out=getattr(args, "out", None),
        fmt=getattr(args, "format", "tsv"),
        threads=_threads(getattr(args, "threads", None)),
    ).validate()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_graph(path: str) -> WeightedGraph:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        G = read_edge_list(path)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return G


def _vector(path: str, n: int) -> np.ndarray:
    x = read_vector(path)
    if x.shape != (n,):
        raise PreconditionError(f"vector in {path} has {x.size} entries, graph has {n} vertices")
    return x


def _vertex(token: str, labels: list[str] | None, n: int) -> int:
    if labels is not None:
        try:
            return labels.index(token)
        except ValueError:
            raise PreconditionError(f"unknown vertex label {token!r}") from None
    try:
        i = int(token)
    except ValueError:
        raise PreconditionError(f"vertex {token!r} is not an integer id; pass --labels") from None
    if not 0 <= i < n:
        raise PreconditionError(f"vertex {i} outside [0, {n})")
    return i


# -- commands ---------------------------------------------------------------------------


def cmd_gen(args) -> int:
    G = generators.make(args.kind, args.params, args.seed)
    if args.out:
        write_edge_list(G, args.out)
    else:
        from .graph import format_edge_list
        sys.stdout.write(format_edge_list(G))
    return 0


def cmd_sketch(args) -> int:
    cfg = _config(args)
    if args.action == "build":
        G = _load_graph(cfg.input)
        sk = build_sketch(G, cfg.eps, cfg.seed, c_alpha=cfg.c_alpha, phi_target=cfg.phi_target)
        if not cfg.out:
            raise PreconditionError("sketch build needs --out")
        Path(cfg.out).write_bytes(sk.to_bytes())
        if G.labels is not None:
            write_label_map(G, cfg.out + ".labels")
        if args.json:
            Path(cfg.out + ".json").write_text(sk.to_json())
        print(json.dumps({"n": sk.n, "alpha": sk.alpha, "entries": len(sk.entries),
                          "item_count": sk.item_count, "exact": sk.is_exact}))
        return 0
    sk = LaplacianSketch.from_bytes(_read_bytes(args.sketch))
    x = _vector(args.vec, sk.n)
    print(repr(eval_sketch(sk, x)))
    return 0


def _read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise FileNotFoundError(f"cannot read {path}: {exc}") from exc


def cmd_pinv(args) -> int:
    cfg = _config(args)
    if args.action == "build":
        G = _load_graph(cfg.input)
        psk = build_pinv_sketch(G, cfg.eps, cfg.seed, copies=cfg.copies or 1, c_alpha=cfg.c_alpha,
                                dense_threshold=cfg.dense_threshold, phi_target=cfg.phi_target)
        if not cfg.out:
            raise PreconditionError("pinv build needs --out")
        Path(cfg.out).write_bytes(psk.to_bytes())
        if G.labels is not None:
            write_label_map(G, cfg.out + ".labels")
        print(json.dumps({"n": psk.n, "eps_internal": psk.eps_internal, "z": psk.solver.z,
                          "preconditioner": psk.solver.N.mode, "certified": psk.certified,
                          "sparsifier_edges": psk.solver.sparsifier.graph.m,
                          "sketch_copies": len(psk.sketches)}))
        return 0
    psk = PseudoinverseSketch.from_bytes(_read_bytes(args.sketch))
    if args.action == "query":
        b = _vector(args.vec, psk.n)
        print(repr(eval_pinv_sketch(psk, b, project_range=args.project_range)))
        return 0
    labels = read_label_map(args.labels) if args.labels else None
    u, v = _vertex(args.u, labels, psk.n), _vertex(args.v, labels, psk.n)
    print(repr(resistance_query(psk, u, v)))
    return 0


def _read_pairs(path: str, labels, n: int) -> list[tuple[int, int]]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FileNotFoundError(f"cannot read {path}: {exc}") from exc
    pairs = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].split()
        if not line:
            continue
        if len(line) != 2:
            raise IngestError(f"pairs file line {raw!r}: expected 'u v'")
        pairs.append((_vertex(line[0], labels, n), _vertex(line[1], labels, n)))
    return pairs


def cmd_allpairs(args) -> int:
    cfg = _config(args)
    G = _load_graph(cfg.input)
    labels = list(G.labels) if G.labels is not None else None
    pairs = _read_pairs(args.pairs_file, labels, G.n) if args.pairs_file else None
    t0 = time.perf_counter()
    res = all_pairs_resistances(G, cfg.eps, cfg.copies, cfg.seed, threads=cfg.threads,
                                c_alpha=cfg.c_alpha, dense_threshold=cfg.dense_threshold,
                                phi_target=cfg.phi_target)
    if cfg.fmt == "npy":
        if not cfg.out:
            raise PreconditionError("--format npy needs --out")
        np.save(cfg.out, res.table())
    elif cfg.out:
        res.write_tsv(cfg.out, pairs, labels)
    else:
        R = res.table() if pairs is None else None
        name = (lambda i: labels[i]) if labels else str
        rows = (res.pairs(pairs) if pairs is not None else
                [(i, j, R[i, j]) for i, j in zip(*map(np.ndarray.tolist, np.triu_indices(G.n, 1)))])
        sys.stdout.write("".join(f"{name(u)}\t{name(v)}\t{r!r}\n" for u, v, r in rows))
    print(json.dumps({"n": G.n, "copies": res.copies, "seconds": time.perf_counter() - t0}),
          file=sys.stderr)
    return 0


def _bench_graph(args) -> WeightedGraph:
    if args.input:
        return _load_graph(args.input)
    if args.gen:
        kind, *params = args.gen
        return generators.make(kind, [float(p) for p in params], args.seed)
    raise PreconditionError("bench needs --input or --gen")


def _percentiles(errs) -> dict:
    if len(errs) == 0:
        return {}
    errs = np.asarray(errs)
    return {f"p{q}": float(np.percentile(errs, q)) for q in (50, 90, 99, 100)}


def _random_queries(G: WeightedGraph, count: int, seed: int, in_range: bool) -> np.ndarray:
    X = generator(seed, "bench-queries").standard_normal((count, G.n))
    if in_range:
        k, lab = component_labels(G)
        X = np.stack([project_to_range(lab, k, x) for x in X])
    return X


def cmd_bench(args) -> int:
    cfg = _config(args)
    G = _bench_graph(args)
    report: dict = {"config": asdict(cfg), "n": G.n, "m": G.m, "sketch": [], "pinv": None,
                    "allpairs": None}
    oracle = None
    if 0 < G.n <= cfg.dense_threshold:
        from .oracle import DenseOracle
        oracle = DenseOracle(G)
    X = _random_queries(G, args.queries, cfg.seed, in_range=False)
    for eps in args.eps_list:
        t0 = time.perf_counter()
        sk = build_sketch(G, eps, cfg.seed, c_alpha=cfg.c_alpha, phi_target=cfg.phi_target)
        built = time.perf_counter() - t0
        t0 = time.perf_counter()
        vals = [eval_sketch(sk, x) for x in X]
        lat = (time.perf_counter() - t0) / max(len(X), 1)
        entry = {"eps": eps, "alpha": sk.alpha, "build_seconds": built, "item_count": sk.item_count,
                 "exact": sk.is_exact, "query_seconds": lat, "serialized_bytes": len(sk.to_bytes())}
        if oracle is not None and G.m:
            exact = [quadratic_form(G, x) for x in X]
            entry["rel_error"] = _percentiles([abs(a - e) / e for a, e in zip(vals, exact) if e > 0])
        report["sketch"].append(entry)
    counts = [e["item_count"] for e in report["sketch"]]
    report["sketch_growth_per_halving"] = [b / a if a else None for a, b in zip(counts, counts[1:])]

    if cfg.eps <= 0.25:
        t0 = time.perf_counter()
        psk = build_pinv_sketch(G, cfg.eps, cfg.seed, copies=cfg.copies or 1, c_alpha=cfg.c_alpha,
                                dense_threshold=cfg.dense_threshold, phi_target=cfg.phi_target)
        built = time.perf_counter() - t0
        B = _random_queries(G, args.queries, cfg.seed + 1, in_range=True)
        t0 = time.perf_counter()
        vals = [eval_pinv_sketch(psk, b) for b in B]
        lat = (time.perf_counter() - t0) / max(len(B), 1)
        entry = {"eps": cfg.eps, "build_seconds": built, "query_seconds": lat,
                 "serialized_bytes": len(psk.to_bytes()), "preconditioner": psk.solver.N.mode}
        if oracle is not None and G.m:
            exact = [float(b @ oracle.pinv @ b) for b in B]
            entry["rel_error"] = _percentiles([abs(a - e) / e for a, e in zip(vals, exact) if e > 0])
        report["pinv"] = entry
        if args.allpairs and G.n:
            t0 = time.perf_counter()
            res = all_pairs_resistances(G, cfg.eps, cfg.copies or 1, cfg.seed, threads=cfg.threads,
                                        c_alpha=cfg.c_alpha, dense_threshold=cfg.dense_threshold)
            R = res.table()
            entry = {"copies": res.copies, "seconds": time.perf_counter() - t0}
            if oracle is not None:
                Ro = oracle.resistances()
                mask = np.isfinite(Ro) & (Ro > 0)
                entry["rel_error"] = _percentiles(np.abs(R[mask] / Ro[mask] - 1))
            report["allpairs"] = entry
    _emit(json.dumps(report, indent=1, sort_keys=True) + "\n", cfg.out)
    return 0


def cmd_oracle(args) -> int:
    from .oracle import DenseOracle, cheeger_check, jl_baseline_resistances, EXHAUSTIVE_MAX_N
    cfg = _config(args)
    G = _load_graph(cfg.input)
    orc = DenseOracle(G)
    report: dict = {"n": G.n, "m": G.m, "eps": cfg.eps}
    X = _random_queries(G, args.queries, cfg.seed, in_range=False)
    sk = build_sketch(G, cfg.eps, cfg.seed, c_alpha=cfg.c_alpha, phi_target=cfg.phi_target)
    errs = []
    for x in X:
        e = quadratic_form(G, x)
        if e > 0:
            errs.append(abs(eval_sketch(sk, x) - e) / e)
    report["sketch"] = {"within_eps": float(np.mean(np.array(errs) <= cfg.eps)) if errs else None,
                        "rel_error": _percentiles(errs), "item_count": sk.item_count}
    if cfg.eps <= 0.25:
        psk = build_pinv_sketch(G, cfg.eps, cfg.seed, c_alpha=cfg.c_alpha,
                                dense_threshold=cfg.dense_threshold, phi_target=cfg.phi_target)
        B = _random_queries(G, args.queries, cfg.seed + 1, in_range=True)
        perrs = []
        for b in B:
            e = float(b @ orc.pinv @ b)
            if e > 0:
                perrs.append(abs(eval_pinv_sketch(psk, b) - e) / e)
        report["pinv"] = {"within_eps": float(np.mean(np.array(perrs) <= cfg.eps)) if perrs else None,
                          "rel_error": _percentiles(perrs), "serialized_bytes": len(psk.to_bytes())}
        jl = jl_baseline_resistances(G, cfg.eps, cfg.seed)
        report["jl_baseline"] = {"k": jl.k, "stored_floats": jl.stored_floats,
                                 "stored_bytes": jl.stored_bytes}
    if 2 <= G.n <= EXHAUSTIVE_MAX_N and component_labels(G)[0] == 1:
        lam, phi, ok = cheeger_check(G)
        report["cheeger"] = {"lambda2": lam, "phi": phi, "holds": ok}
    _emit(json.dumps(report, indent=1, sort_keys=True) + "\n", cfg.out)
    return 0


# -- parser ---------------------------------------------------------------------------------


def _common(p, eps: float = 0.25):
    p.add_argument("--eps", type=float, default=eps)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--c-alpha", type=float, default=1.0, help="sample budget constant")
    p.add_argument("--phi-target", type=float, default=None, help="partition conductance target")
    p.add_argument("--dense-threshold", type=int, default=DENSE_THRESHOLD)
    p.add_argument("--threads", type=int, default=None, help="overrides LAPSKETCH_THREADS")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lapsketch", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a generated graph as an edge list")
    g.add_argument("kind", choices=generators.KINDS)
    g.add_argument("params", nargs="*", type=float)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("sketch", help="Laplacian quadratic-form sketches")
    ssub = s.add_subparsers(dest="action", required=True)
    sb = ssub.add_parser("build")
    sb.add_argument("--input", required=True)
    sb.add_argument("--out", required=True)
    sb.add_argument("--json", action="store_true", help="also write a JSON debug dump")
    _common(sb)
    sq = ssub.add_parser("query")
    sq.add_argument("--sketch", required=True)
    sq.add_argument("--vec", required=True)
    s.set_defaults(func=cmd_sketch)

    p = sub.add_parser("pinv", help="pseudoinverse sketches")
    psub = p.add_subparsers(dest="action", required=True)
    pb = psub.add_parser("build")
    pb.add_argument("--input", required=True)
    pb.add_argument("--out", required=True)
    pb.add_argument("--copies", type=int, default=None, help="Laplacian sketch copies (median)")
    _common(pb)
    pq = psub.add_parser("query")
    pq.add_argument("--sketch", required=True)
    pq.add_argument("--vec", required=True)
    pq.add_argument("--project-range", action="store_true",
                    help="remove per-component means instead of rejecting b")
    pr = psub.add_parser("resistance")
    pr.add_argument("--sketch", required=True)
    pr.add_argument("--u", required=True)
    pr.add_argument("--v", required=True)
    pr.add_argument("--labels", help="label map written by pinv build")
    p.set_defaults(func=cmd_pinv)

    a = sub.add_parser("allpairs", help="all-pairs effective resistances")
    a.add_argument("--input", required=True)
    a.add_argument("--out")
    a.add_argument("--copies", type=int, default=None)
    a.add_argument("--pairs-file", help="only report the listed 'u v' pairs")
    a.add_argument("--format", choices=("tsv", "npy"), default="tsv")
    _common(a)
    a.set_defaults(func=cmd_allpairs)

    b = sub.add_parser("bench", help="JSON size/time/accuracy report")
    b.add_argument("--input")
    b.add_argument("--gen", nargs="+", metavar="KIND_OR_PARAM")
    b.add_argument("--out")
    b.add_argument("--copies", type=int, default=None)
    b.add_argument("--eps-list", type=float, nargs="+", default=[0.5, 0.25, 0.125])
    b.add_argument("--queries", type=int, default=100)
    b.add_argument("--allpairs", action="store_true")
    _common(b)
    b.set_defaults(func=cmd_bench)

    o = sub.add_parser("oracle", help="compare sketches against brute force")
    osub = o.add_subparsers(dest="action", required=True)
    oc = osub.add_parser("compare")
    oc.add_argument("--input", required=True)
    oc.add_argument("--out")
    oc.add_argument("--queries", type=int, default=100)
    _common(oc)
    o.set_defaults(func=cmd_oracle)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, IsADirectoryError, PermissionError, IngestError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except CertificationError as exc:
        print(f"certification failed: {exc}", file=sys.stderr)
        return EXIT_CERTIFICATION
    except LapSketchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
