"""Compare the compiled kernels against the numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N]``. Each kernel is
timed on both backends with identical inputs and the outputs are checked
for agreement before timing.
"""
import argparse
import timeit

import numpy as np

from alefx._kernels import _pure

try:
    from alefx._kernels import _ext
except ImportError:
    _ext = None


def cases(rng):
    n = 200_000
    ids = rng.integers(0, 400, n).astype(np.int64)
    vals = rng.normal(size=n)
    mask = (rng.random(40 * 40) < 0.3).astype(np.uint8)
    xs = np.sort(rng.normal(size=20_000))
    ys = xs ** 2 + rng.normal(size=xs.size)
    # balanced depth-10 tree on 4 features
    depth = 10
    m = 2 ** (depth + 1) - 1
    internal = 2 ** depth - 1
    feature = np.full(m, -1, dtype=np.int64)
    feature[:internal] = rng.integers(0, 4, internal)
    threshold = rng.normal(size=m)
    left = np.full(m, -1, dtype=np.int64)
    right = np.full(m, -1, dtype=np.int64)
    left[:internal] = 2 * np.arange(internal) + 1
    right[:internal] = 2 * np.arange(internal) + 2
    value = rng.normal(size=m)
    X = rng.normal(size=(100_000, 4))
    return {
        "group_sum": (ids, vals, 400),
        "nearest_nonempty": (mask, (40, 40)),
        "best_split": (xs, ys, 5),
        "tree_predict": (feature, threshold, left, right, value, X),
    }


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if _ext is None:
        print("compiled extension not built; only the fallback is available")
        return 1
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18}{'cython ms':>12}{'python ms':>12}{'speedup':>10}  agree")
    for name, inputs in cases(rng).items():
        fc, fp = getattr(_ext, name), getattr(_pure, name)
        agree = same(fc(*inputs), fp(*inputs))
        tc = min(timeit.repeat(lambda: fc(*inputs), number=1, repeat=args.repeat)) * 1e3
        tp = min(timeit.repeat(lambda: fp(*inputs), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<18}{tc:>12.2f}{tp:>12.2f}{tp / tc:>9.1f}x  {agree}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
