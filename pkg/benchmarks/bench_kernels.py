"""Compare the compiled and pure-Python kernels.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from frpsim import kernels


def lru_case(mod, trace):
    core = mod.LRUCore(512, 8)
    return lambda: core.run(trace)


def first_hit_case(mod, words, table):
    return lambda: mod.first_hit(words, *table, 8)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(1)
    trace = rng.integers(0, 8192, size=200_000, dtype=np.uint64)

    n = 256
    ids = np.sort(rng.choice(1 << 40, size=n, replace=False).astype(np.uint64))
    zeros = rng.integers(0, 1 << 20, size=n, dtype=np.int64)
    sizes = np.full(n, 64, dtype=np.int64)
    targets = np.ones(n, dtype=np.uint8)
    # Random encoded words that all miss, so the whole batch is scanned.
    words = (rng.integers(1 << 63, 1 << 64, size=200_000, dtype=np.uint64,
                          endpoint=False) | np.uint64(1 << 48))
    table = (ids, zeros, sizes, targets)

    found = kernels.backends()
    print(f"default backend: {kernels.BACKEND}")
    results = {}
    for name, mod in found.items():
        for case, fn in (("lru.run 200k", lru_case(mod, trace)),
                         ("first_hit 200k", first_hit_case(mod, words, table))):
            best = min(timeit.repeat(fn, number=1, repeat=args.repeat))
            results[(case, name)] = best
            print(f"{case:16s} {name:7s} {best * 1e3:9.2f} ms")
    if "cython" in found:
        for case in ("lru.run 200k", "first_hit 200k"):
            ratio = results[(case, "python")] / results[(case, "cython")]
            print(f"{case:16s} speedup {ratio:.1f}x")


if __name__ == "__main__":
    main()
