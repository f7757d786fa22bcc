"""Compare the numba-jitted kernels against the pure-numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py``.  Requires numba to be
importable (otherwise only the numpy path is timed).
"""

import time

import numpy as np

from msasim import _kernels


def _time(fn, *args, repeat=5):
    fn(*args)  # warm-up (triggers JIT compilation on the numba path)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_pattern(rng):
    n_angles, n_units = 3600, 160
    k_sums = rng.normal(size=(n_angles, 3))
    positions = rng.normal(size=(n_units, 3))
    weights = rng.normal(size=n_units) + 1j * rng.normal(size=n_units)
    args = (k_sums, positions, weights)
    rows = [("pattern_direct_sum", "numpy", _time(_kernels._pattern_numpy, *args))]
    if _kernels.USE_NUMBA:
        rows.append(("pattern_direct_sum", "numba", _time(_kernels._pattern_numba, *args)))
        np.testing.assert_allclose(
            _kernels._pattern_numba(*args), _kernels._pattern_numpy(*args), rtol=1e-10
        )
    return rows


def bench_greedy(rng):
    n = 160
    t0 = rng.normal(size=n) + 1j * rng.normal(size=n)
    t1 = rng.normal(size=n) + 1j * rng.normal(size=n)
    start = rng.integers(0, 2, n).astype(np.int64)

    def run_numpy():
        for _ in range(20):
            _kernels._greedy_numpy(t0, t1, start.copy())

    rows = [("greedy_ascent x20", "numpy", _time(run_numpy))]
    if _kernels.USE_NUMBA:

        def run_numba():
            for _ in range(20):
                _kernels._greedy_numba(t0, t1, start.copy())

        rows.append(("greedy_ascent x20", "numba", _time(run_numba)))
        np.testing.assert_array_equal(
            _kernels._greedy_numba(t0, t1, start.copy()),
            _kernels._greedy_numpy(t0, t1, start.copy()),
        )
    return rows


def bench_exhaustive(rng):
    n = 16
    t0 = rng.normal(size=n) + 1j * rng.normal(size=n)
    t1 = rng.normal(size=n) + 1j * rng.normal(size=n)
    rows = [("exhaustive_best n=16", "numpy", _time(_kernels._exhaustive_numpy, t0, t1, repeat=3))]
    if _kernels.USE_NUMBA:
        rows.append(
            ("exhaustive_best n=16", "numba", _time(_kernels._exhaustive_numba, t0, t1, repeat=3))
        )
        assert _kernels._exhaustive_numba(t0, t1)[0] == _kernels._exhaustive_numpy(t0, t1)[0]
    return rows


def main():
    print(f"numba path available: {_kernels.USE_NUMBA}")
    rng = np.random.default_rng(0)
    rows = bench_pattern(rng) + bench_greedy(rng) + bench_exhaustive(rng)
    print(f"{'kernel':<24} {'path':<7} {'best (ms)':>10}")
    by_kernel = {}
    for name, path, t in rows:
        print(f"{name:<24} {path:<7} {t * 1e3:>10.3f}")
        by_kernel.setdefault(name, {})[path] = t
    for name, paths in by_kernel.items():
        if "numba" in paths:
            print(f"{name}: numba speedup {paths['numpy'] / paths['numba']:.1f}x")


if __name__ == "__main__":
    main()
