"""Per-iteration accuracy and PoW of A2LP with and without domain shift.

    python scripts/ssl_vs_uda.py [--iters 10] [--seeds 7 8 9]
"""
import argparse
import warnings

import numpy as np

from a2lp import A2lpConfig, a2lp, benchmark

warnings.simplefilter("ignore")


def curves(shift, seeds, iters):
    acc = np.full((len(seeds), iters), np.nan)
    pw = np.full_like(acc, np.nan)
    for i, s in enumerate(seeds):
        fs, truth = benchmark(s, shift=shift)
        res = a2lp(fs, A2lpConfig(anchor_iters=iters, early_stop=False), truth)
        acc[i] = [r.acc for r in res.diagnostics]
        pw[i] = [r.pow for r in res.diagnostics]
    return acc.mean(0), pw.mean(0)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--iters", type=int, default=10)
    ap.add_argument("--seeds", type=int, nargs="+", default=[7, 8, 9])
    args = ap.parse_args()
    rows = {name: curves(shift, args.seeds, args.iters)
            for name, shift in (("uda", True), ("ssl", False))}
    print("iter,uda_acc,uda_pow,ssl_acc,ssl_pow")
    for t in range(args.iters):
        print(f"{t + 1},{100 * rows['uda'][0][t]:.2f},{rows['uda'][1][t]:.4f},"
              f"{100 * rows['ssl'][0][t]:.2f},{rows['ssl'][1][t]:.4f}")


if __name__ == "__main__":
    main()
