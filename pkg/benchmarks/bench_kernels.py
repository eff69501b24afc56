"""Time the compiled and the numpy kernel backends on the same inputs.

    python benchmarks/bench_kernels.py [--n 2000000] [--repeat 3]
"""
import argparse
import time

import numpy as np

from akount import kernels


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(n, seed=0):
    rng = np.random.default_rng(seed)
    seq = rng.choice(np.frombuffer(b"ACGT", np.uint8), n).tobytes()
    keys = rng.integers(0, 2**62, n, dtype=np.uint64)
    dup = rng.integers(0, n // 20 + 1, n).astype(np.uint64)
    dup.sort()
    vals = np.ones(n, dtype=np.uint64)

    def sort_copy(mod):
        arr = keys.copy()
        mod.radix_sort(arr)

    def sort_pairs(mod):
        k, v = keys.copy(), vals.copy()
        mod.radix_sort_pairs(k, v)

    return {
        "extract_kmers k=31": lambda mod: mod.extract_kmers(seq, 31),
        "owner_pe P=64": lambda mod: mod.owner_pe(keys, 64),
        "radix_sort": sort_copy,
        "radix_sort_pairs": sort_pairs,
        "accumulate": lambda mod: mod.accumulate(dup),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2_000_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    backends = kernels.available_backends()
    names = sorted(backends)
    print(f"n = {args.n:,}; backends: {', '.join(names)} (default {kernels.BACKEND})")
    print(f"{'kernel':<22}" + "".join(f"{n:>12}" for n in names)
          + (f"{'speedup':>10}" if len(names) > 1 else ""))
    for label, fn in cases(args.n).items():
        t = {n: best_of(lambda: fn(backends[n]), args.repeat) for n in names}
        row = f"{label:<22}" + "".join(f"{t[n] * 1e3:>10.1f}ms" for n in names)
        if "cython" in t:
            row += f"{t['python'] / t['cython']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
