"""Timing comparison of the numba kernels against the pure-numpy fallbacks.

Run:  python benchmarks/bench_backends.py
"""

import time

import numpy as np

from heatlab import _kernels_numba, _kernels_numpy
from heatlab.potentials import V_POWER


def timeit(fn, *args, repeat=5):
    fn(*args)  # warm (JIT compile for the numba path)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_bridge(n=20000, m=256, d=1):
    rng = np.random.Generator(np.random.Philox(key=1))
    z = rng.standard_normal((n, m - 1, d))
    params = np.array([1.0, 2.0])
    rows = []
    for name, mod in (("numba", _kernels_numba), ("numpy", _kernels_numpy)):
        paths = np.zeros((n, m + 1, d))
        paths[:, -1, :] = 1.0

        def run():
            mod.fill_bridge(paths, z, 1.0)
            mod.path_weights(paths, 1.0, V_POWER, params)

        rows.append((f"bridge+weights ({name})", timeit(run)))
    return rows


def bench_cn(n=1023, steps=2000):
    v = np.linspace(0, 4, n) ** 2
    u = np.exp(-np.linspace(-4, 4, n) ** 2)
    rows = []
    for name, mod in (("numba", _kernels_numba), ("numpy", _kernels_numpy)):
        rows.append((f"cn {steps} steps ({name})",
                     timeit(lambda: mod.cn_propagate(u, 1e-3, 8.0 / n, v, steps))))
    return rows


if __name__ == "__main__":
    print(f"{'kernel':<28}{'best (s)':>10}")
    for row in bench_bridge() + bench_cn():
        print(f"{row[0]:<28}{row[1]:>10.4f}")
