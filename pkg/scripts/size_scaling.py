"""Stored item counts of the Laplacian sketch as eps and n vary.

    python scripts/size_scaling.py --n 256 512 --eps 0.5 0.25 0.125 --c-alpha 2e-4
"""
import argparse
import json

from lapsketch import generators as gen
from lapsketch.sketch import build_sketch


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[256, 512])
    ap.add_argument("--eps", type=float, nargs="+", default=[0.5, 0.25, 0.125])
    ap.add_argument("--degree", type=int, default=16)
    ap.add_argument("--c-alpha", type=float, default=2e-4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for n in args.n:
        G = gen.random_regular(n, args.degree, seed=args.seed)
        for eps in args.eps:
            sk = build_sketch(G, eps, args.seed, c_alpha=args.c_alpha)
            print(json.dumps({"n": n, "m": G.m, "eps": eps, "alpha": sk.alpha,
                              "items": sk.item_count, "exact": sk.is_exact,
                              "bytes": len(sk.to_bytes())}))


if __name__ == "__main__":
    main()
