"""Compare the compiled simplex kernels against the pure-Python fallback.

Runs each kernel in isolation on a random tableau, then whole dense LP
solves through :func:`meso.milp.simplex.simplex_lp` with either backend
swapped in.  Usage::

    python benchmarks/bench_kernels.py [--sizes 40 80 160] [--repeat 5]
"""
import argparse
import contextlib
import time

import numpy as np

from meso.milp import _kernel_py, kernels, simplex

try:
    from meso.milp import _kernel
except ImportError:
    _kernel = None


@contextlib.contextmanager
def backend(mod):
    saved = kernels.pivot, kernels.price, kernels.ratio_test
    kernels.pivot, kernels.price, kernels.ratio_test = mod.pivot, mod.price, mod.ratio_test
    try:
        yield
    finally:
        kernels.pivot, kernels.price, kernels.ratio_test = saved


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def random_lp(m, n, rng):
    """Feasible, bounded LP: x = 0.5 satisfies every row, boxes keep it bounded."""
    A = rng.uniform(-1, 1, (m, n))
    mid = A @ np.full(n, 0.5)
    lo = mid - rng.uniform(0.1, 2.0, m)
    hi = mid + rng.uniform(0.1, 2.0, m)
    c = rng.normal(size=n)
    return c, A, lo, hi, np.zeros(n), np.ones(n)


def bench_pivot(mod, size, repeat, rng):
    T0 = np.ascontiguousarray(rng.uniform(1, 2, (size + 1, 2 * size + 1)))
    r, j = size // 2, size

    def run():
        T = T0.copy()
        for _ in range(20):
            mod.pivot(T, r, j)

    return best_of(run, repeat)


def bench_ratio(mod, size, repeat, rng):
    col = rng.normal(size=size)
    beta = rng.uniform(0, 1, size)
    ub = rng.uniform(1, 2, size)
    basis = np.arange(size, dtype=np.int64)

    def run():
        for _ in range(200):
            mod.ratio_test(col, beta, ub, basis, 1.0, 1e-9, False)

    return best_of(run, repeat)


def bench_lp(mod, size, repeat, rng):
    lps = [random_lp(size, size, rng) for _ in range(3)]

    def run():
        with backend(mod):
            for lp in lps:
                simplex.simplex_lp(*lp)

    return best_of(run, repeat)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[40, 80, 160])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if _kernel is None:
        print("compiled kernel not built; only the Python timings are shown")
    mods = [("python", _kernel_py)] + ([("cython", _kernel)] if _kernel is not None else [])
    print(f"{'case':<14}{'size':>6}" + "".join(f"{name:>12}" for name, _ in mods) + f"{'speedup':>10}")
    for label, fn in (("pivot x20", bench_pivot), ("ratio x200", bench_ratio), ("dense LP x3", bench_lp)):
        for size in args.sizes:
            times = [fn(mod, size, args.repeat, np.random.default_rng(args.seed)) for _, mod in mods]
            speed = f"{times[0] / times[1]:>9.1f}x" if len(times) > 1 else ""
            print(f"{label:<14}{size:>6}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times) + speed)


if __name__ == "__main__":
    main()
