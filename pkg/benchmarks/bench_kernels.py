"""Compare the compiled and pure-Python motif kernels.

Times ``b2_count`` on complete edge-sign matrices of typical reduced-universe
sizes and ``neg_degree_totals`` on a full-universe sign matrix, then prints a
small table with the speedup of the compiled backend. Run with::

    python benchmarks/bench_kernels.py
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from hedgegraph import _kernels


def random_edge_signs(rng: np.random.Generator, n: int) -> np.ndarray:
    m = np.where(rng.random((n, n)) < 0.5, 1, -1).astype(np.int8)
    m = np.triu(m, 1)
    return np.ascontiguousarray(m + m.T)


def timeit(fn, *args, repeat: int = 5) -> float:
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="20,30,40",
                        help="comma-separated K values for b2_count")
    parser.add_argument("--assets", type=int, default=199,
                        help="universe size for neg_degree_totals")
    parser.add_argument("--days", type=int, default=252,
                        help="window length for neg_degree_totals")
    parser.add_argument("--repeat", type=int, default=5, help="timing repeats")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    py = _kernels.get_backend("python")
    backends = [("python", py)]
    if _kernels.BACKEND == "cython":
        backends.append(("cython", _kernels.get_backend("cython")))
    else:
        print("compiled backend unavailable; timing pure Python only")

    print(f"{'kernel':<28}{'size':>10}" + "".join(f"{name:>12}" for name, _ in backends)
          + ("" if len(backends) == 1 else f"{'speedup':>10}"))
    for k in (int(s) for s in args.sizes.split(",")):
        signs = random_edge_signs(rng, k)
        counts = [kern.b2_count(signs) for _, kern in backends]
        assert len(set(counts)) == 1, "backends disagree"
        times = [timeit(kern.b2_count, signs, repeat=args.repeat) for _, kern in backends]
        row = f"{'b2_count':<28}{f'K={k}':>10}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>9.1f}x"
        print(row)

    signs = np.where(rng.random((args.assets, args.days)) < 0.5, 1, -1).astype(np.int8)
    results = [kern.neg_degree_totals(signs) for _, kern in backends]
    assert all(np.array_equal(results[0], r) for r in results[1:])
    times = [timeit(kern.neg_degree_totals, signs, repeat=args.repeat) for _, kern in backends]
    label = f"N={args.assets},T={args.days}"
    row = f"{'neg_degree_totals':<28}{label:>10}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times)
    if len(times) == 2:
        row += f"{times[0] / times[1]:>9.1f}x"
    print(row)


if __name__ == "__main__":
    main()
