"""Wall time of the all-pairs table against a loop of single resistance queries.

    python scripts/allpairs_speed.py --n 128 --eps 0.25
"""
import argparse
import itertools
import json
import time

from lapsketch import generators as gen
from lapsketch.allpairs import all_pairs_resistances, copy_seed
from lapsketch.pinv import build_pinv_sketch, resistance_query


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--p", type=float, default=0.1)
    ap.add_argument("--eps", type=float, default=0.25)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--loop-pairs", type=int, default=None, help="time only this many pairs")
    args = ap.parse_args()
    G = gen.erdos_renyi(args.n, args.p, seed=args.seed)
    t0 = time.perf_counter()
    all_pairs_resistances(G, args.eps, copies=1, seed=args.seed).table()
    table = time.perf_counter() - t0
    t0 = time.perf_counter()
    psk = build_pinv_sketch(G, args.eps, copy_seed(args.seed, 0))
    pairs = list(itertools.combinations(range(G.n), 2))
    timed = pairs[:args.loop_pairs] if args.loop_pairs else pairs
    for u, v in timed:
        resistance_query(psk, u, v)
    loop = (time.perf_counter() - t0) * len(pairs) / len(timed)
    print(json.dumps({"n": G.n, "m": G.m, "allpairs_seconds": table,
                      "query_loop_seconds": loop, "ratio": table / loop,
                      "loop_extrapolated": len(timed) < len(pairs)}))


if __name__ == "__main__":
    main()
