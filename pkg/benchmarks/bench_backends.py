"""Compare the compiled core against the numpy fallback.

Times each backend kernel and two end-to-end calls on the same inputs and
prints one row per case with the median time per call and the speedup.

    python3 benchmarks/bench_backends.py --repeat 7
"""
import argparse
import timeit

import numpy as np

from mrdkit import _backend
from mrdkit.baselines import SinkhornConfig, sinkhorn
from mrdkit.data import gen_two_gaussians, make_rng
from mrdkit.mrd import MrdConfig, RidgePath, mrd_heuristic


def cases(n):
    rng = make_rng(0)
    X1, X2 = gen_two_gaussians(n, m=2, offset=3.0, seed=1)
    path = RidgePath(X2.T @ X2, X2.T @ X1)
    hi = float(np.sqrt(path.values.max()) + path.values.max())
    A, B = rng.standard_normal((3, n)), rng.standard_normal((3, n)) + 1.0
    M = ((A[:, :, None] - B[:, None, :]) ** 2).sum(axis=0)
    a = np.full(n, 1.0 / n)
    return {
        "bisect_ridge_norm": lambda be: be.bisect_ridge_norm(path.K, path.values, hi, 1e-6, 200),
        "sq_dists": lambda be: be.sq_dists(A, B),
        "sinkhorn_log": lambda be: be.sinkhorn_log(M, a, a, 0.5, 10_000, 1e-9),
        "sinkhorn_scaling": lambda be: be.sinkhorn_scaling(M, a, a, 1.0, 10_000, 1e-9),
        "mrd_heuristic": lambda be: mrd_heuristic(X1, X2, MrdConfig()),
        "sinkhorn": lambda be: sinkhorn(A, B, SinkhornConfig(epsilon=1.0)),
    }


def median_time(fn, backend, repeat):
    with _backend.use(backend) as be:
        timer = timeit.Timer(lambda: fn(be))
        number, _ = timer.autorange()
        return float(np.median(timer.repeat(repeat, number))) / number


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[20, 50, 200])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    backends = _backend.available()
    if "cython" not in backends:
        print("compiled core not built; timing the numpy fallback only")
    print(f"{'case':<18} {'n':>5} " + " ".join(f"{b + ' (us)':>14}" for b in backends) + f" {'speedup':>8}")
    for n in args.sizes:
        for name, fn in cases(n).items():
            t = {b: median_time(fn, b, args.repeat) for b in backends}
            speedup = t["python"] / t["cython"] if "cython" in t else float("nan")
            print(f"{name:<18} {n:>5} " + " ".join(f"{t[b] * 1e6:>14.1f}" for b in backends) + f" {speedup:>8.2f}")


if __name__ == "__main__":
    main()
