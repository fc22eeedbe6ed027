"""Sweeps over alpha, k and the similarity metric, plus the entropy-weight
and surrogate-source ablations, on the shifted benchmark.

    python scripts/ablations.py [--repeats 3]
"""
import argparse
import warnings

import numpy as np

from a2lp import A2lpConfig, a2lp, accuracy, benchmark
from a2lp.cli import run_sweep

warnings.simplefilter("ignore")
BASE = dict(k=20, alpha=0.5, metric="cosine", solver="cg", cg_tol=1e-6, anchor_iters=10,
            graph_method="brute", surrogate_source=False)


def table(axis, values, repeats):
    print(f"{axis},mean_acc,stderr")
    for v, m, se, _ in run_sweep(axis, values, BASE, repeats, 7):
        print(f"{v},{100 * m:.2f},{100 * se:.2f}")
    print()


def variant(repeats, **overrides):
    return 100 * np.mean([accuracy(a2lp(fs, A2lpConfig(**overrides), t).predictions, t)
                          for fs, t in (benchmark(7 + r) for r in range(repeats))])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    table("alpha", [0.1, 0.25, 0.5, 0.75, 0.9], args.repeats)
    table("k", [5, 10, 20, 50, 100], args.repeats)
    table("metric", ["cosine", "gaussian", "scalar3"], args.repeats)
    print(f"entropy weights: {variant(args.repeats):.2f}")
    print(f"uniform weights: {variant(args.repeats, entropy_weighting=False):.2f}")
    print(f"surrogate source: {variant(args.repeats, surrogate_source=True):.2f}")


if __name__ == "__main__":
    main()
