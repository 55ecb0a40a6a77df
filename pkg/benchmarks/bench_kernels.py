"""Time each kernel under the compiled and the numpy backend.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from graphrank._kernels import backends


def workloads(rng):
    K, n = 500, 200_000
    i = rng.integers(0, K, n)
    j = (i + rng.integers(1, K, n)) % K
    y = rng.standard_normal(n)
    a, b = np.triu_indices(K, 1)
    keep = rng.random(a.size) < 0.3
    ei, ej = a[keep], b[keep]
    w = rng.random(ei.size) + 0.5
    order = np.argsort(-w, kind="stable")
    mu = rng.standard_normal(300)
    perm = rng.permutation(5000)
    G = rng.standard_normal((10_000, 30))
    return {
        "aggregate_pairs": lambda m: m.aggregate_pairs(i, j, y, K),
        "laplacian": lambda m: m.laplacian(K, ei, ej, w),
        "component_labels": lambda m: m.component_labels(K, ei, ej),
        "kruskal": lambda m: m.kruskal(K, ei, ej, order),
        "rank_vector": lambda m: m.rank_vector(mu),
        "inversion_count": lambda m: m.inversion_count(perm),
        "cycle_count": lambda m: m.cycle_count(perm),
        "min_gap_sq": lambda m: m.min_gap_sq(G),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    mods = backends()
    jobs = workloads(np.random.default_rng(0))
    names = list(mods)
    print(f"{'kernel':<18}" + "".join(f"{n + ' [ms]':>16}" for n in names) + f"{'speedup':>10}")
    for kname, job in jobs.items():
        best = {}
        for bname, mod in mods.items():
            best[bname] = min(timeit.repeat(lambda: job(mod), number=1, repeat=args.repeat)) * 1e3
        line = f"{kname:<18}" + "".join(f"{best[n]:>16.3f}" for n in names)
        if "cython" in best:
            line += f"{best['python'] / best['cython']:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
