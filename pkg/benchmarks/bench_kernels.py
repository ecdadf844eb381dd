"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--sizes 50 200 1000]

Prints one row per kernel and input size with the best-of-N wall time for
each backend and the speedup of the compiled one.
"""
import argparse
import math
import timeit

import numpy as np

from fallsift import _backend


def _cases(sizes, seed):
    rng = np.random.default_rng(seed)
    for n in sizes:
        a, b = rng.normal(0, 3, n), rng.normal(0, 3, n)
        yield f"directed_hd_1d n={n}", "directed_hd_1d", (a, b)
        a2, b2 = rng.normal(0, 3, (n, 2)), rng.normal(0, 3, (n, 2))
        yield f"directed_hd_2d n={n}", "directed_hd_2d", (a2, b2)
    k = 1.5 * 9.81 / 1.7
    for dt in (1e-3, 1e-4):
        args = (math.radians(1.0), 0.0, k, dt, math.pi / 2, 1.7, math.inf, False, 10**8)
        yield f"rod_rk4 dt={dt:g}", "rod_rk4", args


def best_time(fn, args, repeat):
    number = 1
    while timeit.timeit(lambda: fn(*args), number=number) < 0.05:
        number *= 4
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sizes", type=int, nargs="+", default=[50, 200, 1000])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    names = _backend.available()
    if "cython" not in names:
        print("compiled kernels not built; timing the Python fallback only")
    print(f"{'case':<24}" + "".join(f"{n + ' [s]':>14}" for n in names)
          + ("    speedup" if len(names) > 1 else ""))
    for label, kernel, kargs in _cases(args.sizes, args.seed):
        times = [best_time(getattr(_backend.kernels(n), kernel), kargs, args.repeat)
                 for n in names]
        row = f"{label:<24}" + "".join(f"{t:>14.3e}" for t in times)
        if len(times) > 1:
            row += f"{times[0] / times[1]:>10.1f}x"
        print(row)


if __name__ == "__main__":
    main()
