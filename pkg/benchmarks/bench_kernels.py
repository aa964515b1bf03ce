"""Compiled versus NumPy kernels: mutual impedance of many dipole pairs and one array block.

Run with ``python3 benchmarks/bench_kernels.py [pairs]``.
"""

import sys
import time

import numpy as np

from risimp import kernels
from risimp.impedance import array_block
from risimp.scene import Role, planar_array, wavelength_for


def _time(fn, repeat=3):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(pairs: int = 20000):
    rng = np.random.default_rng(0)
    rho = rng.uniform(0.1, 10.0, pairs)
    z1 = np.zeros(pairs)
    z2 = rng.uniform(-2.0, 2.0, pairs)
    h1 = np.full(pairs, 0.25)
    h2 = rng.choice([0.125, 0.25], pairs)
    lam = wavelength_for(28.0)
    panel = planar_array((0, 0, 0), (1, 0, 0), 20, 20, lam / 2, lam / 2, Role.TX)

    results = {}
    for name in ("python", "cython"):
        try:
            kernels.use_backend(name)
        except ImportError:
            print(f"{name:<8} unavailable")
            continue
        t_pairs, z = _time(lambda: kernels.mutual_pairs(rho, z1, h1, z2, h2))
        t_block, _ = _time(lambda: array_block(panel, lam, lam / 500))
        results[name] = z
        print(f"{name:<8} {pairs} pairs {t_pairs * 1e3:9.2f} ms ({t_pairs / pairs * 1e6:6.2f} us/pair)"
              f"   400-element block {t_block * 1e3:8.2f} ms")
    if len(results) == 2:
        a, b = results["python"], results["cython"]
        print(f"max relative difference {np.max(np.abs(a - b) / np.abs(a)):.2e}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 20000)
