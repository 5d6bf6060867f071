"""Relative error of sketch and pseudoinverse estimates against the dense oracle.

    python scripts/accuracy_sweep.py --alpha 2 4 8 --eps 0.25
"""
import argparse
import json

import numpy as np

from lapsketch import generators as gen
from lapsketch.graph import component_labels, project_to_range, quadratic_form
from lapsketch.oracle import DenseOracle
from lapsketch.pinv import build_pinv_sketch
from lapsketch.sketch import build_sketch


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--degree", type=int, default=16)
    ap.add_argument("--alpha", type=int, nargs="+", default=[2, 4, 8, 16])
    ap.add_argument("--eps", type=float, default=0.25)
    ap.add_argument("--queries", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    G = gen.random_regular(args.n, args.degree, seed=args.seed)
    rng = np.random.default_rng(args.seed)
    k, lab = component_labels(G)
    X = rng.standard_normal((args.queries, G.n))
    B = np.stack([project_to_range(lab, k, x) for x in X])
    exact_q = np.array([quadratic_form(G, x) for x in X])
    P = DenseOracle(G).pinv
    exact_p = np.einsum("ij,jk,ik->i", B, P, B)
    for alpha in args.alpha:
        sk = build_sketch(G, args.eps, args.seed, alpha=alpha)
        eq = np.abs(np.array([sk(x) for x in X]) / exact_q - 1)
        eps_pinv = min(args.eps, 0.25)
        psk = build_pinv_sketch(G, eps_pinv, args.seed, alpha=alpha)
        ep = np.abs(np.array([psk(b) for b in B]) / exact_p - 1)
        print(json.dumps({"alpha": alpha, "items": sk.item_count,
                          "sketch_within_eps": float(np.mean(eq <= args.eps)),
                          "sketch_p50": float(np.median(eq)), "sketch_max": float(eq.max()),
                          "pinv_within_eps": float(np.mean(ep <= eps_pinv)),
                          "pinv_p50": float(np.median(ep)), "pinv_max": float(ep.max())}))


if __name__ == "__main__":
    main()
