"""Compare the compiled kernels with their numpy fallbacks.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5]

Prints the best-of-``repeat`` wall time for each kernel under each backend
and checks that both backends return the same values.
"""
import argparse
import timeit

import numpy as np

from blocksdp import _kernels_py as python_backend
from blocksdp.kernels import compiled_backend


def cases(rng):
    lo, hi = np.triu_indices(2000, 1)
    C = rng.normal(size=(9, 9, 3, 3))
    X = rng.normal(size=(1600, 1600))
    U = rng.normal(size=X.shape)
    W = rng.normal(size=X.shape)
    w = rng.uniform(size=X.shape[0])
    return {
        "pair_uniforms (2e6 dyads)": lambda b: b.pair_uniforms(7, lo, hi),
        "best_labeling (3^9 labelings)": lambda b: b.best_labeling(C),
        "nonneg_dual_update (1600^2)": lambda b: b.nonneg_dual_update(X, U.copy(), W, w),
    }


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=1e-12, atol=1e-12)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if compiled_backend is None:
        print("compiled extension not importable; only the numpy backend is timed")
    rng = np.random.default_rng(0)
    print(f"{'kernel':32s} {'numpy ms':>10s} {'compiled ms':>12s} {'speedup':>8s}  agree")
    for name, fn in cases(rng).items():
        t_py = min(timeit.repeat(lambda: fn(python_backend), number=1, repeat=args.repeat))
        if compiled_backend is None:
            print(f"{name:32s} {1e3 * t_py:10.2f} {'n/a':>12s} {'n/a':>8s}")
            continue
        t_c = min(timeit.repeat(lambda: fn(compiled_backend), number=1, repeat=args.repeat))
        agree = same(fn(python_backend), fn(compiled_backend))
        print(f"{name:32s} {1e3 * t_py:10.2f} {1e3 * t_c:12.2f} {t_py / t_c:7.1f}x  {agree}")


if __name__ == "__main__":
    main()
