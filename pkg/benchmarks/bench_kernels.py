"""Compare the compiled and pure-numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints one line per kernel with the best-of-N wall time for each backend and
the speedup.  Also checks that both backends agree on the benchmark inputs.
"""

import argparse
import time

import numpy as np

from genunif import kernels


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(rng):
    p = rng.dirichlet(np.ones(200_000))
    u = rng.random(2_000_000)
    # first 3-wise collision sits deep in the chunk for a wide uniform domain
    ids = rng.integers(0, 5_000_000, size=400_000)
    seg_ids = rng.integers(0, 2_000, size=1_000_000)
    lengths = np.full(10_000, 100)
    counts = rng.poisson(3.0, size=1_000_000)
    rs = np.array([2, 3, 4, 5])

    tables = {b.BACKEND: b.build_alias(p) for b in (kernels.python_backend, kernels.compiled_backend) if b}

    return {
        "build_alias(200k)": lambda b: b.build_alias(p),
        "alias_lookup(2M)": lambda b: b.alias_lookup(*tables[b.BACKEND], u),
        "scan_first_collision(400k, r=3)": lambda b: b.scan_first_collision(ids, np.zeros(5_000_000, np.int64), 3),
        "falling_factorial_sum(1M, r=5)": lambda b: b.falling_factorial_sum(counts, 5),
        "segment_falling_factorials(10k x 100)": lambda b: b.segment_falling_factorials(seg_ids, lengths, 2_000, rs),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    py, cy = kernels.python_backend, kernels.compiled_backend
    if cy is None:
        print("compiled backend not available; only the python timings are shown")
    rng = np.random.default_rng(0)
    print(f"{'kernel':40s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for name, fn in cases(rng).items():
        t_py = best_of(lambda: fn(py), args.repeat)
        if cy is None:
            print(f"{name:40s} {t_py * 1e3:12.2f}")
            continue
        a, b = fn(py), fn(cy)
        same = all(np.array_equal(x, y) for x, y in zip(a, b)) if isinstance(a, tuple) else np.allclose(a, b, rtol=1e-12)
        if not same:
            raise SystemExit(f"backends disagree on {name}")
        t_cy = best_of(lambda: fn(cy), args.repeat)
        print(f"{name:40s} {t_py * 1e3:12.2f} {t_cy * 1e3:12.2f} {t_py / t_cy:7.1f}x")


if __name__ == "__main__":
    main()
