"""Time the compiled kernels against the numpy fallback, then a short dHPR run.

Usage: python3 benchmarks/bench_kernels.py [--repeat 20]
"""

import argparse
import timeit

import numpy as np

from dhpr import _kernels_py, kernels
from dhpr.graph import make_graph
from dhpr.problem import gen_logistic

try:
    from dhpr import _kernels as _compiled
except ImportError:
    _compiled = None


def cases(rng):
    X = rng.standard_normal((20, 500))
    th = np.abs(rng.standard_normal(20))
    ptr = np.arange(0, 501, 10, dtype=np.intp)
    gth = np.abs(rng.standard_normal((20, 50)))
    xi = rng.standard_normal((20, 100))
    b = np.where(rng.random((20, 100)) < 0.5, -1.0, 1.0)
    t = np.full(20, 0.7)
    g = make_graph("random", 20, 0.5, seed=0)
    ip, ix, w = g.csr
    return {
        "soft_threshold": lambda m: m.soft_threshold(X, th),
        "group_shrink": lambda m: m.group_shrink(X, ptr, gth),
        "logistic_prox": lambda m: m.logistic_prox(xi, t, b),
        "neighbor_mix": lambda m: m.neighbor_mix(ip, ix, w, X),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    rng = np.random.Generator(np.random.Philox(0))
    print(f"active backend: {kernels.BACKEND}")
    print(f"{'kernel':<16}{'python us':>12}{'cython us':>12}{'speedup':>10}{'max diff':>12}")
    for name, fn in cases(rng).items():
        tp = min(timeit.repeat(lambda: fn(_kernels_py), number=10, repeat=args.repeat)) / 10 * 1e6
        if _compiled is None:
            print(f"{name:<16}{tp:>12.1f}{'n/a':>12}")
            continue
        tc = min(timeit.repeat(lambda: fn(_compiled), number=10, repeat=args.repeat)) / 10 * 1e6
        diff = float(np.max(np.abs(np.asarray(fn(_kernels_py)) - np.asarray(fn(_compiled)))))
        print(f"{name:<16}{tp:>12.1f}{tc:>12.1f}{tp / tc:>10.1f}{diff:>12.2e}")

    from dhpr.solver import SolverConfig, run_dhpr

    pr = gen_logistic(20, 10, 50, seed=0)
    cfg = SolverConfig(tol=0.0, k_max=200, compute_v_each_iter=False, trace_every=200)
    t = min(timeit.repeat(lambda: run_dhpr(pr, cfg), number=1, repeat=3))
    print(f"dhpr logistic N=20 m=10 p=50, 200 iterations ({kernels.BACKEND}): {t * 1e3:.1f} ms")


if __name__ == "__main__":
    main()
