"""Compare the compiled and pure-Python kernel backends.

Usage: python3 benchmarks/bench_kernels.py [--n 100000] [--batch 200] [--repeat 3]

Each kernel is run on identical inputs in both backends; outputs are
checked for bit-identity before timings are reported.
"""

import argparse
import time

import numpy as np

from seedtrace.kernels import available_backends
from seedtrace.tree_model import RngStream, grow_many, path


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def same(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return a.shape == b.shape and a.tobytes() == b.tobytes()


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100_000, help="tree size for single-tree kernels")
    ap.add_argument("--batch", type=int, default=200, help="trees of size 1000 for g_totals")
    ap.add_argument("--tau-host", type=int, default=2000, help="host size for f_tau_float")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    gen = RngStream(2024, 0).generator
    big = grow_many(path(2), args.n, 1, gen)[0]
    batch = grow_many(path(2), 1000, args.batch, gen)
    host = grow_many(path(2), args.tau_host, 1, gen)[0]
    tau_par, tau_lab = [-1, 0, 1], [1, 2, 1]

    cases = {
        "subtree_sizes": lambda k: k.subtree_sizes(big),
        "g_total": lambda k: k.g_total(big),
        "g_totals": lambda k: k.g_totals(batch),
        "diameter": lambda k: k.diameter(big),
        "f_tau_float": lambda k: k.f_tau_float(host, tau_par, tau_lab),
    }
    backends = available_backends()
    if "cython" not in backends:
        print("compiled backend not built; only the Python timings are shown")
    print(f"{'kernel':<15}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}  identical")
    for name, fn in cases.items():
        times, outs = {}, {}
        for b, mod in backends.items():
            times[b], outs[b] = best_of(lambda: fn(mod), args.repeat)
        row = f"{name:<15}" + "".join(f"{times[b]:>11.4f}s" for b in backends)
        if "cython" in times:
            row += f"{times['python'] / times['cython']:>9.1f}x  {same(outs['python'], outs['cython'])}"
        print(row)


if __name__ == "__main__":
    main()
