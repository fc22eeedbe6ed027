"""Command-line entry point: ``a2lp {gen,propagate,a2lp,alternate,sweep}``.

Exit codes: 0 success, 2 bad arguments or invalid input, 3 I/O failure.
Diagnostics go to stdout as JSON lines; summaries and warnings go to stderr.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .align import DEFAULT_EPS, alternate
from .anchors import a2lp, inject_label_noise, label_propagation
from .core import A2lpConfig, A2lpError
from .data import (SyntheticSpec, benchmark, generate_synthetic_uda, read_dataset, read_labels,
                   truth_path, write_dataset, write_labels)
from .metrics import accuracy

SOLVER_NAMES = {"closed": "closed_form", "cg": "cg"}
GRAPH_NAMES = {"brute": "brute", "nn-descent": "nn_descent"}


class ArgError(A2lpError):
    pass


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj) + "\n")
    sys.stdout.flush()


def _config(args, **overrides) -> A2lpConfig:
    params = dict(k=args.k, alpha=args.alpha, metric=args.metric,
                  solver=SOLVER_NAMES[args.solver], cg_tol=args.cg_tol,
                  anchor_iters=args.iters, graph_method=GRAPH_NAMES[args.graph],
                  surrogate_source=args.surrogate, seed=args.seed)
    params.update(overrides)
    return A2lpConfig(**params)


def _load(args):
    fs = read_dataset(args.data)
    path = Path(args.truth) if args.truth else truth_path(args.data)
    truth = None
    if path.exists():
        ids, labels = read_labels(path)
        truth = np.empty(fs.n_unlabeled, dtype=np.int64)
        pos = ids - fs.n_labeled
        if len(ids) != fs.n_unlabeled or np.any(pos < 0) or np.any(pos >= fs.n_unlabeled) \
                or np.unique(pos).size != pos.size:
            raise ArgError(f"{path}: truth ids must cover the unlabeled rows exactly once")
        truth[pos] = labels
    elif args.truth:
        raise FileNotFoundError(args.truth)
    return fs, truth


def _finish(args, fs, truth, pred) -> None:
    if args.output:
        write_labels(pred, args.output, column="pred", offset=fs.n_labeled)
    final = {"final": True, "n_predictions": int(len(pred))}
    if truth is not None:
        final["acc"] = accuracy(pred, truth)
    _emit(final)


def cmd_gen(args) -> None:
    spec = SyntheticSpec(n_classes=args.classes, n_labeled_per_class=args.per_class_labeled,
                         n_unlabeled_per_class=args.per_class_unlabeled, dims=args.dims,
                         cluster_std=args.cluster_std, separation=args.separation,
                         rotation=args.rot, translation=args.tau * args.cluster_std,
                         seed=args.seed)
    fs, truth = generate_synthetic_uda(spec)
    write_dataset(fs, args.output)
    write_labels(truth, truth_path(args.output), column="label", offset=fs.n_labeled)
    print(f"wrote {args.output}: n={fs.n} (labeled {fs.n_labeled}, unlabeled {fs.n_unlabeled}), "
          f"d={fs.dim}, K={fs.n_classes}; truth in {truth_path(args.output)}", file=sys.stderr)


def cmd_propagate(args) -> None:
    fs, truth = _load(args)
    pred = label_propagation(fs, _config(args, anchor_iters=1))
    _finish(args, fs, truth, pred)


def cmd_a2lp(args) -> None:
    fs, truth = _load(args)
    res = a2lp(fs, _config(args), truth)
    for rec in res.diagnostics:
        _emit(rec.to_json())
    _finish(args, fs, truth, res.predictions)


def cmd_alternate(args) -> None:
    fs, truth = _load(args)
    res = alternate(fs, _config(args), args.rounds, truth, align=not args.no_align, eps=args.eps)
    for r, diag in enumerate(res.rounds, start=1):
        for rec in diag:
            _emit({"round": r, **rec.to_json()})
    _finish(args, fs, truth, res.predictions)


def _parse_values(axis: str, raw: str) -> list:
    items = [v.strip() for v in (raw or "").split(",") if v.strip()]
    if not items:
        raise ArgError("--values must list at least one value")
    try:
        if axis == "k":
            return [int(v) for v in items]
        if axis in ("alpha", "noise"):
            return [float(v) for v in items]
    except ValueError as exc:
        raise ArgError(f"bad --values for axis {axis}: {exc}") from None
    return items


def _sweep_cell(job) -> float:
    axis, value, cfg_kwargs, seed, data, tau = job
    if data is None:
        fs, truth = benchmark(seed, shift=tau > 0, **({"translation": tau} if tau > 0 else {}))
    else:
        fs, truth = data
    if axis == "noise":
        cfg = A2lpConfig(**{**cfg_kwargs, "seed": seed})
        init = inject_label_noise(truth, value, fs.n_classes, seed)
        res = a2lp(fs, cfg, truth, initial_pseudo=init)
    else:
        key = {"k": "k", "alpha": "alpha", "metric": "metric"}[axis]
        cfg = A2lpConfig(**{**cfg_kwargs, key: value, "seed": seed})
        res = a2lp(fs, cfg, truth)
    return accuracy(res.predictions, truth)


def _workers(n_jobs: int) -> int:
    cap = os.environ.get("A2LP_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(limit, n_jobs))


def run_sweep(axis: str, values: list, cfg_kwargs: dict, repeats: int, base_seed: int,
              data=None, tau: float = 2.0) -> list[tuple]:
    """``(value, mean, stderr, n)`` per cell; cells are returned in ``values`` order."""
    jobs = [(axis, v, cfg_kwargs, base_seed + r, data, tau) for v in values for r in range(repeats)]
    workers = _workers(len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            accs = list(pool.map(_sweep_cell, jobs))
    else:
        accs = [_sweep_cell(j) for j in jobs]
    rows = []
    for i, v in enumerate(values):
        a = np.array(accs[i * repeats:(i + 1) * repeats])
        se = float(a.std(ddof=1) / math.sqrt(len(a))) if len(a) > 1 else 0.0
        rows.append((v, float(a.mean()), se, len(a)))
    return rows


def cmd_sweep(args) -> None:
    values = _parse_values(args.axis, args.values)
    if args.repeats < 1:
        raise ArgError("--repeats must be at least 1")
    iters = args.iters if args.iters is not None else (2 if args.axis == "noise" else 10)
    cfg = _config(args, anchor_iters=iters)
    cfg_kwargs = {f: getattr(cfg, f) for f in ("k", "alpha", "metric", "solver", "cg_tol",
                                               "anchor_iters", "graph_method", "surrogate_source")}
    data = None
    if args.data:
        fs, truth = _load(args)
        if truth is None:
            raise ArgError("sweep needs ground truth for the unlabeled rows")
        data = (fs, truth)
    rows = run_sweep(args.axis, values, cfg_kwargs, args.repeats, args.seed, data, args.tau)
    lines = [f"{args.axis},mean_acc,stderr,repeats"]
    lines += [f"{v},{m:.6f},{s:.6f},{n}" for v, m, s, n in rows]
    text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _add_run_flags(p: argparse.ArgumentParser, *, iters_default=10) -> None:
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--metric", choices=["cosine", "gaussian", "scalar3"], default="cosine")
    p.add_argument("--solver", choices=sorted(SOLVER_NAMES), default="cg")
    p.add_argument("--cg-tol", type=float, default=1e-6)
    p.add_argument("--iters", type=int, default=iters_default, help="anchor iterations N")
    p.add_argument("--graph", choices=sorted(GRAPH_NAMES), default="brute")
    p.add_argument("--surrogate", action="store_true", help="replace labeled rows by class means")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--truth", help="ground-truth CSV (default: <data>.truth.csv if present)")
    p.add_argument("-o", "--output", help="output file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="a2lp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a synthetic shifted-cluster dataset")
    g.add_argument("--classes", type=int, default=12)
    g.add_argument("--per-class-labeled", type=int, default=100)
    g.add_argument("--per-class-unlabeled", type=int, default=100)
    g.add_argument("--dims", type=int, default=32)
    g.add_argument("--cluster-std", type=float, default=1.0)
    g.add_argument("--separation", type=float, default=SyntheticSpec.separation,
                   help="radius of the class-mean circle in cluster_std units")
    g.add_argument("--tau", type=float, default=2.0, help="translation in cluster_std units")
    g.add_argument("--rot", type=float, default=0.0, help="rotation in radians")
    g.add_argument("--seed", type=int, default=7)
    g.add_argument("-o", "--output", required=True, help=".csv or binary output path")
    g.set_defaults(func=cmd_gen)

    for name, func, doc in [("propagate", cmd_propagate, "plain label propagation"),
                            ("a2lp", cmd_a2lp, "label propagation with augmented anchors"),
                            ("alternate", cmd_alternate, "alternate A2LP with feature alignment")]:
        p = sub.add_parser(name, help=doc)
        p.add_argument("data")
        _add_run_flags(p)
        if name == "alternate":
            p.add_argument("--rounds", type=int, default=3)
            p.add_argument("--no-align", action="store_true")
            p.add_argument("--eps", type=float, default=DEFAULT_EPS)
        p.set_defaults(func=func)

    s = sub.add_parser("sweep", help="ablation sweep over one axis")
    s.add_argument("data", nargs="?", help="dataset (default: generated benchmark per seed)")
    _add_run_flags(s, iters_default=None)
    s.add_argument("--axis", choices=["k", "alpha", "metric", "noise"], required=True)
    s.add_argument("--values", required=True)
    s.add_argument("--repeats", type=int, default=3)
    s.add_argument("--tau", type=float, default=2.0,
                   help="shift of the generated benchmark (ignored with a dataset)")
    s.set_defaults(func=cmd_sweep, seed=7)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            args.func(args)
    except A2lpError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0
