"""Command-line interface: ``mrdkit <subcommand> ...``.

Exit codes are 0 on success, 1 for usage errors and 2 for runtime failures.
Set ``MRDKIT_LOG`` to ``error``, ``warn``, ``info`` or ``debug`` for logging.
"""
import argparse
import csv
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from mrdkit import __version__, _backend
from mrdkit.data import (
    Layout,
    gen_gaussian_clouds,
    gen_polygons,
    gen_spiral,
    gen_two_gaussians,
    load_collection,
    load_matrix,
    make_rng,
    save_collection,
    save_matrix,
    save_report,
)
from mrdkit.ddsc import ADAPTIVE, ami, ari, cluster_distances, pairwise_distances
from mrdkit.errors import MrdError
from mrdkit.kernels import KernelSpec
from mrdkit.metrics import METRICS, MetricOptions, evaluate, make_metric
from mrdkit.mrd import MrdConfig, mrd_heuristic, mrd_oracle
from mrdkit.robustness import check_kernel_bound, check_linear_bound

log = logging.getLogger("mrdkit")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2
LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_or_auto(text):
    if text == ADAPTIVE:
        return ADAPTIVE
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return value


def _nonneg_float(text):
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return value


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return value


def _sizes(text):
    """``start:stop:step`` (inclusive stop) or a comma-separated list."""
    try:
        if ":" in text:
            start, stop, step = (int(p) for p in text.split(":"))
            values = list(range(start, stop + 1, step))
        else:
            values = [int(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size list {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError(f"bad size list {text!r}")
    return values


def _add_metric_args(p, default="mrd"):
    p.add_argument("--metric", choices=METRICS, default=default)
    p.add_argument("--kernel", choices=["gaussian", "poly", "linear"], default="gaussian")
    p.add_argument("--bandwidth", type=_float_or_auto, default=ADAPTIVE)
    p.add_argument("--degree", type=_positive_int, default=2)
    p.add_argument("--coef0", type=float, default=1.0)
    p.add_argument("--lambda12", type=_nonneg_float)
    p.add_argument("--lambda21", type=_nonneg_float)
    p.add_argument("--epsilon", type=float, default=0.1, help="Sinkhorn regularization")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--w1", type=float, default=0.5, help="weight of the first residual; w2 = 1 - w1")


def _add_common(p):
    p.add_argument("--out", default="-", help="output path, '-' for stdout")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=_positive_int, default=None, help="worker threads (default: all cores)")


def _kernel(args):
    if args.kernel == "linear":
        return KernelSpec.linear()
    if args.kernel == "poly":
        return KernelSpec.polynomial(args.degree, args.coef0)
    return KernelSpec.gaussian(args.bandwidth)


def _metric_options(args):
    if args.metric.endswith("-s") and (args.lambda12 is None or args.lambda21 is None):
        raise UsageError(f"--metric {args.metric} needs --lambda12 and --lambda21")
    return MetricOptions(kernel=_kernel(args), lambda12=args.lambda12, lambda21=args.lambda21,
                         w1=args.w1, tol=args.tol, epsilon=args.epsilon)


def _layout(args):
    return Layout.COLUMNS if args.columns else Layout.ROWS


def cmd_dist(args):
    opts = _metric_options(args)
    X1 = load_matrix(args.x1, _layout(args))
    X2 = load_matrix(args.x2, _layout(args))
    t0 = time.perf_counter()
    report = evaluate(args.metric, X1, X2, opts)
    report["wall_time"] = time.perf_counter() - t0
    report["metric"] = args.metric
    save_report(report, args.out)


def _write_csv(rows, header, out):
    if out == "-":
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _distances(args, collection):
    metric = make_metric(args.metric, _metric_options(args))
    return pairwise_distances(collection, metric, parallel=True, jobs=args.jobs, tag=args.metric)


def cmd_pairwise(args):
    collection = load_collection(args.manifest)
    D = _distances(args, collection)
    rows = [[format(v, ".17g") for v in row] for row in D.values]
    _write_csv(rows, collection.names, args.out)


def cmd_cluster(args):
    collection = load_collection(args.manifest)
    if args.k > len(collection):
        raise UsageError(f"--k {args.k} exceeds the number of sets ({len(collection)})")
    D = _distances(args, collection)
    result = cluster_distances(D, args.k, gamma=args.gamma, seed=args.seed)
    report = result.to_dict()
    report["names"] = list(collection.names)
    if collection.labels is not None:
        report["ari"] = ari(collection.labels, result.labels)
        report["ami"] = ami(collection.labels, result.labels)
    save_report(report, args.out)


def cmd_gen(args):
    if args.kind == "polygons":
        coll = gen_polygons(args.n, radius=args.radius, seed=args.seed)
    elif args.kind == "spiral":
        coll = gen_spiral(args.n, seed=args.seed)
    else:
        coll = gen_gaussian_clouds(args.k, args.per_cluster, args.points, args.dim,
                                   args.separation, args.spread, seed=args.seed)
    if args.out == "-":
        raise UsageError("gen needs --out DIR")
    path = save_collection(coll, args.out)
    log.info("wrote %d sets and %s", len(coll), path)


def _robustness_inputs(args):
    if args.x1 or args.x2:
        if not (args.x1 and args.x2):
            raise UsageError("give both --x1 and --x2 or neither")
        return load_matrix(args.x1, _layout(args)), load_matrix(args.x2, _layout(args))
    rng = make_rng(args.seed, 2**32 - 1)
    return rng.standard_normal((args.m, args.n1)), rng.standard_normal((args.m, args.n2))


def cmd_robustness(args):
    X1, X2 = _robustness_inputs(args)
    cfg = MrdConfig(w1=args.w1, w2=1.0 - args.w1, tol=args.tol)
    if args.kind == "linear":
        report = check_linear_bound(X1, X2, args.sigma, args.t, args.trials, args.seed, cfg, jobs=args.jobs)
    else:
        if args.bandwidth == ADAPTIVE:
            raise UsageError("robustness kernel needs a numeric --bandwidth")
        report = check_kernel_bound(X1, X2, KernelSpec.gaussian(args.bandwidth), args.sigma, args.t,
                                    args.trials, args.seed, cfg, jobs=args.jobs)
    out = report.to_dict()
    out["kind"] = args.kind
    save_report(out, args.out)


def run_bench(sizes, instances=20, m=2, offset=3.0, seed=0, tol=1e-6):
    """Heuristic vs projected-gradient timing and accuracy on two-Gaussian pairs.

    Returns one row per size: ``(n, time_heuristic, time_oracle, relative_error)``
    with median times in seconds and the largest relative error.
    """
    rows = []
    for n in sizes:
        th, to, errs = [], [], []
        for k in range(instances):
            X1, X2 = gen_two_gaussians(n, m=m, offset=offset, seed=seed * 1_000_003 + n * 1009 + k)
            t0 = time.perf_counter()
            h = mrd_heuristic(X1, X2, MrdConfig(tol=tol)).distance
            t1 = time.perf_counter()
            o = mrd_oracle(X1, X2, tol=tol * 1e-2)
            t2 = time.perf_counter()
            th.append(t1 - t0)
            to.append(t2 - t1)
            errs.append(abs(h - o) / o)
        rows.append((n, float(np.median(th)), float(np.median(to)), float(max(errs))))
    return rows


def cmd_bench(args):
    rows = run_bench(args.sizes, args.instances, args.m, args.offset, args.seed, args.tol)
    _write_csv([[n, f"{a:.6e}", f"{b:.6e}", f"{e:.6e}"] for n, a, b, e in rows],
               ["n", "time_heuristic", "time_oracle", "relative_error"], args.out)


def build_parser():
    p = _Parser(prog="mrdkit", description="Mutual regression distances between sample sets.")
    p.add_argument("--version", action="version", version=f"mrdkit {__version__}")
    p.add_argument("--backend", choices=_backend.available(), help="numeric kernel backend")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("dist", help="distance between two CSV sample files")
    d.add_argument("x1")
    d.add_argument("x2")
    d.add_argument("--columns", action="store_true", help="CSV columns are samples")
    _add_metric_args(d)
    _add_common(d)
    d.set_defaults(func=cmd_dist)

    pw = sub.add_parser("pairwise", help="distance matrix over a manifest")
    pw.add_argument("manifest")
    _add_metric_args(pw)
    _add_common(pw)
    pw.set_defaults(func=cmd_pairwise)

    c = sub.add_parser("cluster", help="spectral clustering of the sets in a manifest")
    c.add_argument("manifest")
    c.add_argument("--k", type=_positive_int, required=True)
    c.add_argument("--gamma", type=_float_or_auto, default=ADAPTIVE)
    _add_metric_args(c)
    _add_common(c)
    c.set_defaults(func=cmd_cluster)

    g = sub.add_parser("gen", help="write a synthetic collection and its manifest")
    g.add_argument("kind", choices=["polygons", "spiral", "clouds"])
    g.add_argument("--n", type=_positive_int, default=400, help="total points (polygons, spiral)")
    g.add_argument("--radius", type=float, default=1.0)
    g.add_argument("--k", type=_positive_int, default=3)
    g.add_argument("--per-cluster", type=_positive_int, default=10)
    g.add_argument("--points", type=_positive_int, default=50)
    g.add_argument("--dim", type=_positive_int, default=2)
    g.add_argument("--separation", type=float, default=10.0)
    g.add_argument("--spread", type=float, default=1.0)
    _add_common(g)
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("robustness", help="Monte-Carlo check of a perturbation bound")
    r.add_argument("kind", choices=["linear", "kernel"])
    r.add_argument("--x1")
    r.add_argument("--x2")
    r.add_argument("--columns", action="store_true")
    r.add_argument("--m", type=_positive_int, default=5)
    r.add_argument("--n1", type=_positive_int, default=10)
    r.add_argument("--n2", type=_positive_int, default=10)
    r.add_argument("--sigma", type=_nonneg_float, default=0.1)
    r.add_argument("--t", type=_nonneg_float, default=3.0)
    r.add_argument("--trials", type=_positive_int, default=200)
    r.add_argument("--bandwidth", type=_float_or_auto, default=1.0)
    r.add_argument("--tol", type=float, default=1e-6)
    r.add_argument("--w1", type=float, default=0.5)
    _add_common(r)
    r.set_defaults(func=cmd_robustness)

    b = sub.add_parser("bench", help="heuristic vs projected-gradient timing")
    b.add_argument("--sizes", type=_sizes, default=_sizes("10:50:10"))
    b.add_argument("--instances", type=_positive_int, default=20)
    b.add_argument("--m", type=_positive_int, default=2)
    b.add_argument("--offset", type=float, default=3.0)
    b.add_argument("--tol", type=float, default=1e-6)
    _add_common(b)
    b.set_defaults(func=cmd_bench)
    return p


def _configure_logging():
    level = LOG_LEVELS.get(os.environ.get("MRDKIT_LOG", "warn").strip().lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    logging.captureWarnings(True)


def main(argv=None):
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help, --version and usage errors
        return exc.code
    try:
        if args.backend:
            with _backend.use(args.backend):
                args.func(args)
        else:
            args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"mrdkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MrdError, OSError, ValueError, np.linalg.LinAlgError) as exc:
        log.debug("command failed", exc_info=True)
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
