"""Accuracy when the first anchors are built from corrupted labels.

The ground-truth target labels, with a fraction replaced by random wrong
classes, stand in for the first round of pseudo labels; two anchor
iterations follow. Vanilla LP is printed for reference.

    python scripts/noise_table.py [--seeds 7 8 9]
"""
import argparse
import warnings

import numpy as np

from a2lp import A2lpConfig, a2lp, accuracy, benchmark, inject_label_noise, label_propagation

warnings.simplefilter("ignore")
LEVELS = (0.0, 0.1, 0.3, 0.5, 0.7, 1.0)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, nargs="+", default=[7, 8, 9])
    ap.add_argument("--iters", type=int, default=2)
    args = ap.parse_args()
    cfg = A2lpConfig(anchor_iters=args.iters)
    lp, table = [], {lev: [] for lev in LEVELS}
    for s in args.seeds:
        fs, truth = benchmark(s)
        lp.append(accuracy(label_propagation(fs, cfg), truth))
        for lev in LEVELS:
            init = inject_label_noise(truth, lev, fs.n_classes, s)
            table[lev].append(accuracy(a2lp(fs, cfg, truth, initial_pseudo=init).predictions, truth))
    print(f"vanilla LP: {100 * np.mean(lp):.2f}")
    print("noise,mean_acc,stderr")
    for lev, accs in table.items():
        a = 100 * np.array(accs)
        print(f"{lev},{a.mean():.2f},{a.std(ddof=1) / np.sqrt(len(a)) if len(a) > 1 else 0:.2f}")


if __name__ == "__main__":
    main()
