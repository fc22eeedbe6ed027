"""Wall time of brute vs NN-descent graphs and dense vs CG solves.

    python scripts/timing.py [--n 20000] [--skip-dense]

The dense solve needs about 8 n^2 bytes (3.2 GB at n = 20000).
"""
import argparse
import time
import warnings

import numpy as np

from a2lp.data import SyntheticSpec, generate_synthetic_uda
from a2lp.graph import (affinity_from_neighbors, knn_brute, knn_indices, knn_recall, normalize,
                        symmetrize)
from a2lp.solver import argmax_labels, solve_cg, solve_closed_form

warnings.simplefilter("ignore")


def timed(f, *a, **kw):
    t0 = time.perf_counter()
    out = f(*a, **kw)
    return out, time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=20_000)
    ap.add_argument("--k", type=int, default=20)
    ap.add_argument("--skip-dense", action="store_true")
    args = ap.parse_args()
    K = 10
    per = args.n // (2 * K)
    fs, _ = generate_synthetic_uda(SyntheticSpec(n_classes=K, n_labeled_per_class=per,
                                                 n_unlabeled_per_class=per, translation=2.0))
    X = fs.vectors
    knn_indices(X[:200], args.k, "cosine", "nn_descent")  # jit warm-up
    exact, tb = timed(knn_brute, X, args.k, "cosine")
    approx, tn = timed(knn_indices, X, args.k, "cosine", "nn_descent")
    print(f"n={fs.n} brute {tb:.2f}s  nn_descent {tn:.2f}s  speedup {tb / tn:.2f}x  "
          f"recall {knn_recall(approx, exact):.3f}")
    S = normalize(symmetrize(affinity_from_neighbors(X, exact, "cosine")))
    Y = fs.label_matrix()
    (Fg, rep), tg = timed(solve_cg, S, Y, 0.5, tol=1e-8)
    print(f"cg {tg:.3f}s ({rep.iterations} iterations)")
    if not args.skip_dense:
        (Fc, _), tc = timed(solve_closed_form, S, Y, 0.5)
        print(f"closed form {tc:.2f}s  speedup {tc / tg:.0f}x  labels identical "
              f"{np.array_equal(argmax_labels(Fc), argmax_labels(Fg))}")


if __name__ == "__main__":
    main()
