"""Time the numba kernels against the numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--rows 200000] [--dim 8] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from iqvi import kernels
from iqvi._jit import HAVE_NUMBA


def cases(rows, dim, rng):
    X = rng.normal(size=(rows, dim)) * 3
    c, lo, hi, a = rng.normal(size=dim), -np.ones(dim), np.ones(dim), rng.normal(size=dim)
    side = int(np.sqrt(rows))
    mask = rng.random((side, side)) < 0.45
    return {
        "ball": lambda k: k.ball(X, c, 1.0),
        "box": lambda k: k.box(X, lo, hi),
        "halfspace": lambda k: k.halfspace(X, a, 0.5),
        "simplex": lambda k: k.simplex(X, 1.0),
        "components": lambda k: k.components(mask),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--rows", type=int, default=200_000)
    ap.add_argument("--dim", type=int, default=8)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        print("numba not importable; nothing to compare")
        return
    rng = np.random.default_rng(0)
    print(f"rows={args.rows} dim={args.dim} best of {args.repeat}")
    print(f"{'kernel':<12}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for name, fn in cases(args.rows, args.dim, rng).items():
        a, b = fn(kernels.numpy_kernels), fn(kernels.numba_kernels)  # warm-up and JIT compile
        assert np.allclose(a, b, atol=1e-12), name
        t_np = min(timeit.repeat(lambda: fn(kernels.numpy_kernels), number=1, repeat=args.repeat)) * 1e3
        t_nb = min(timeit.repeat(lambda: fn(kernels.numba_kernels), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<12}{t_np:>12.2f}{t_nb:>12.2f}{t_np / t_nb:>10.2f}")


if __name__ == "__main__":
    main()
