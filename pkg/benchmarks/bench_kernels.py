"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from fixpoint import _kernels_py

try:
    from fixpoint import _kernels
except ImportError:
    _kernels = None


def cases(rng):
    A = rng.uniform(-0.3, 0.3, (4, 4))
    b = rng.uniform(-0.1, 0.1, 4)
    X = rng.uniform(-1, 1, (2000, 4))
    I = rng.integers(0, 2000, 50_000)
    J = rng.integers(0, 2000, 50_000)
    num, den = rng.random(200_000), rng.random(200_000) + 1e-3
    alpha = 1.0 / np.arange(1, 100_001) ** 2
    return {
        "affine_iterate n=50 (2000x4)": lambda k: k.affine_iterate(A, b, X, 50),
        "affine_iterate n=1 (single point)": lambda k: k.affine_iterate(A, b, X[:1], 1),
        "pair_norms 5e4 pairs": lambda k: k.pair_norms(X, I, J),
        "ratio_max 2e5": lambda k: k.ratio_max(num, den, 1e-14),
        "linear_envelope N=1e5": lambda k: k.linear_envelope(1.0, alpha, alpha),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    if _kernels is None:
        print("compiled extension not built; timing the fallback only")
    print(f"{'kernel':36s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for name, fn in cases(rng).items():
        row = []
        for mod in (_kernels_py, _kernels):
            if mod is None:
                row.append(float("nan"))
                continue
            t = timeit.Timer(lambda: fn(mod))
            loops, _ = t.autorange()
            row.append(min(t.repeat(args.repeat, loops)) / loops * 1e3)
        print(f"{name:36s} {row[0]:10.3f} {row[1]:10.3f} {row[0] / row[1]:8.1f}x")


if __name__ == "__main__":
    main()
