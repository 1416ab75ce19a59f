"""Time the compiled and NumPy kernel backends on representative workloads.

Usage: python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]
"""
import argparse
import json
import timeit

import numpy as np

from sparse_functional import kernels
from sparse_functional.sparse_coding import make_schedule


def workloads(rng):
    A = rng.standard_normal((32, 64))
    A /= np.linalg.norm(A, axis=0)
    x = np.zeros(64)
    x[3] = 1.0
    G = A.T @ A
    mu = float(np.abs(G - np.diag(np.diag(G))).max())
    theta = make_schedule(mu, 1, 1.0, 0.0, 1.0, 50).theta[:50]
    y = A @ x

    big = rng.standard_normal((427, 33))
    wide = rng.standard_normal((64, 512))

    n_cells, d = 16, 3
    coeffs = rng.standard_normal((n_cells + 1) ** d)
    pts = rng.uniform(-0.5, 0.5, size=(20000, d))

    v = rng.standard_normal(100_000)
    return {
        "iteration 32x64 J=50": lambda k: k.thresholded_iteration(A, y, theta, False),
        "iteration 32x64 J=50 traced": lambda k: k.thresholded_iteration(A, y, theta, True),
        "coherence 427x33": lambda k: k.coherence_scan(big),
        "coherence 64x512": lambda k: k.coherence_scan(wide),
        "taylor r=0 d=3 N=16, 20k pts": lambda k: k.taylor_eval_r0(pts, n_cells, coeffs),
        "soft threshold 1e5": lambda k: k.soft_threshold(v, 0.3),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--json", help="also write results to this file")
    args = parser.parse_args(argv)

    backends = kernels.backends()
    if "cython" not in backends:
        print("compiled backend not built; timing the NumPy fallback only")
    rng = np.random.default_rng(0)
    results = {}
    print(f"{'workload':34s}" + "".join(f"{name:>14s}" for name in backends) + f"{'speedup':>10s}")
    for label, fn in workloads(rng).items():
        row = {}
        for name, mod in backends.items():
            timer = timeit.Timer(lambda: fn(mod))
            number, _ = timer.autorange()
            row[name] = min(timer.repeat(args.repeat, number)) / number
        results[label] = row
        speed = row["python"] / row["cython"] if "cython" in row else float("nan")
        print(f"{label:34s}" + "".join(f"{row[n] * 1e6:12.1f}us" for n in backends) + f"{speed:9.1f}x")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump({"backend_default": kernels.BACKEND, "seconds": results}, fh, indent=2)


if __name__ == "__main__":
    main()
