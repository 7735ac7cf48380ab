"""Time the compiled and numpy kernel backends on the same inputs.

Usage::

    python3 benchmarks/bench_kernels.py [--sizes 256 1024 4096] [--repeat 5]

Prints one row per (kernel, size) with the best-of-``repeat`` time for each
backend, the speedup, and the largest absolute difference between their
outputs.
"""
import argparse
import timeit

import numpy as np

from convroots.kernels import available_backends


def cases(n, rng):
    a = rng.dirichlet(np.ones(n))
    b = rng.dirichlet(np.ones(n))
    f = rng.dirichlet(np.ones(min(n, 64)))
    tail = np.sort(rng.random(n + 64))[::-1].copy()
    w = np.exp(-0.5 * np.arange(16) / 16) / 16
    return {
        "convolve_truncated": (lambda m: m.convolve_truncated(a, b, n), lambda r: r[0]),
        "panjer_poisson": (lambda m: m.panjer_poisson(f, 2.0, n), lambda r: r),
        "window_integral": (lambda m: m.window_integral(tail, w, n), lambda r: r),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[256, 1024, 4096])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)

    backends = available_backends()
    names = sorted(backends)
    rng = np.random.default_rng(0)
    print(f"backends: {', '.join(names)}")
    header = f"{'kernel':<20}{'n':>7}" + "".join(f"{n + ' [ms]':>16}" for n in names)
    if len(names) > 1:
        header += f"{'speedup':>10}{'max |diff|':>13}"
    print(header)
    for n in args.sizes:
        for kernel, (call, pick) in cases(n, rng).items():
            times, outs = {}, {}
            for name in names:
                mod = backends[name]
                number = max(1, int(2e5 // n))
                t = min(timeit.repeat(lambda: call(mod), number=number, repeat=args.repeat))
                times[name] = 1e3 * t / number
                outs[name] = pick(call(mod))
            row = f"{kernel:<20}{n:>7}" + "".join(f"{times[x]:>16.4f}" for x in names)
            if len(names) > 1:
                diff = float(np.abs(outs["cython"] - outs["numpy"]).max())
                row += f"{times['numpy'] / times['cython']:>10.2f}{diff:>13.2e}"
            print(row)


if __name__ == "__main__":
    main()
