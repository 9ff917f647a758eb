"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--sizes 10000,40000] [--repeats 5]

For each graph size, times common-neighbor counting, connected components
and top-k selection on both backends, checks that the outputs agree, and
prints a CSV row per (kernel, size, backend).
"""

import argparse
import statistics
import time

import numpy as np

from edgeclust import kernels
from edgeclust.synth import random_graph


def timed(fn, repeats):
    fn()  # warm-up
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times), out


def same(a, b):
    if isinstance(a, tuple):
        return all(np.array_equal(x, y) for x, y in zip(a, b))
    return np.array_equal(a, b)


def cases(n, avg_degree, rng):
    g = random_graph(n, avg_degree, seed=n)
    src, dst, _ = g.undirected_edges()
    sparse = g.keep(rng.random(g.nnz) < 0.05)  # many small components
    sims = rng.standard_normal((min(n, 2048), 4096))
    return {
        "common_neighbors": lambda: kernels.common_neighbor_counts(g.indptr, g.indices, src, dst),
        "components": lambda: kernels.component_labels(n, sparse.indptr, sparse.indices),
        "topk_80": lambda: kernels.topk_select(sims, 80),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="10000,40000")
    ap.add_argument("--avg-degree", type=float, default=20.0)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("# compiled extension not built; timing the python backend only")
    rng = np.random.default_rng(0)
    print("kernel,n,backend,seconds,speedup_vs_python")
    for n in (int(v) for v in args.sizes.split(",")):
        for name, fn in cases(n, args.avg_degree, rng).items():
            results = {}
            for b in backends:
                with kernels.using(b):
                    results[b] = timed(fn, args.repeats)
            outs = [r[1] for r in results.values()]
            if not all(same(outs[0], o) for o in outs[1:]):
                raise SystemExit(f"backends disagree on {name} at n={n}")
            base = results["python"][0]
            for b, (sec, _) in results.items():
                print(f"{name},{n},{b},{sec:.6f},{base / sec:.1f}")


if __name__ == "__main__":
    main()
