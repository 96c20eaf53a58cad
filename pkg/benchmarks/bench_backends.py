"""Benchmark the numba kernels against the pure-numpy fallback.

Runs the three hot kernels on a sweep-sized workload and prints a timing
table. The first numba call includes JIT compilation, so each kernel is
warmed up once before timing.

    python benchmarks/bench_backends.py [--replicas 2000] [--steps 1000]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from lsa_gauss import _kernels_numpy

try:
    from lsa_gauss import _kernels_numba
except ImportError:
    _kernels_numba = None


def workload(replicas: int, steps: int, dim: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((replicas, steps, dim))
    eps = rng.standard_normal((replicas, steps, dim))
    phi = np.diag(rng.uniform(0.2, 1.0, size=dim))
    e0 = rng.standard_normal(dim)
    return x, eps, 0.1, phi, e0


def time_call(fn, *args, repeats: int = 3) -> float:
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--replicas", type=int, default=2000)
    parser.add_argument("--steps", type=int, default=1000)
    parser.add_argument("--dims", type=int, nargs="+", default=[1, 2, 5])
    args = parser.parse_args()

    print(f"replicas={args.replicas} steps={args.steps}")
    header = f"{'kernel':<20} {'d':>3} {'numpy [s]':>12} {'numba [s]':>12} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for dim in args.dims:
        x, eps, alpha, phi, e0 = workload(args.replicas, args.steps, dim)
        cases = [
            ("sgd_errors", lambda k: k.sgd_errors(x, eps, alpha, e0)),
            ("linear_proxy_paths", lambda k: k.linear_proxy_paths(eps, alpha, phi)),
            ("ladder_paths(L=1)", lambda k: k.ladder_paths(x, eps, alpha, phi, e0, 1)),
        ]
        for name, call in cases:
            t_np = time_call(call, _kernels_numpy)
            if _kernels_numba is not None:
                call(_kernels_numba)  # JIT warmup
                t_nb = time_call(call, _kernels_numba)
                print(f"{name:<20} {dim:>3} {t_np:>12.4f} {t_nb:>12.4f} {t_np / t_nb:>8.1f}x")
            else:
                print(f"{name:<20} {dim:>3} {t_np:>12.4f} {'n/a':>12} {'':>9}")

    if _kernels_numba is not None:
        x, eps, alpha, phi, e0 = workload(500, 200, 3, seed=1)
        a = _kernels_numpy.ladder_paths(x, eps, alpha, phi, e0, 2)
        b = _kernels_numba.ladder_paths(x, eps, alpha, phi, e0, 2)
        gap = max(np.max(np.abs(np.asarray(u) - np.asarray(v))) for u, v in zip(a, b))
        print(f"\nmax |numpy - numba| on a shared workload: {gap:.3e}")


if __name__ == "__main__":
    main()
