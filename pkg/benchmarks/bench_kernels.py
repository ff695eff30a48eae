"""Time the numba kernels against the pure-numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Both backends are imported directly, so QET_DISABLE_NUMBA does not matter
here. Compilation is triggered once before timing.
"""
import argparse
import math
import time

import numpy as np

from qet._kernels import _numba as nb
from qet._kernels import _numpy as npk


def best_of(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases():
    rng = np.random.default_rng(0)
    g = rng.standard_normal((2000, 20, 20)) + 1j * rng.standard_normal((2000, 20, 20))
    a = rng.standard_normal((64, 64)) + 1j * rng.standard_normal((64, 64))
    h = 0.5 * (a + a.conj().T)
    D = 40
    f = rng.standard_normal(D * D + 1)
    c = (rng.standard_normal(D * D + 1) + 1j * rng.standard_normal(D * D + 1)) / D
    beta = (np.array([0, 100.0, 1900.0, math.lgamma(2000) - math.lgamma(100) - math.lgamma(1900)]),
            np.linspace(0.0, 1.0, 33))
    return [
        ("qr_batch 2000 x 20x20", lambda k: k.qr_batch(g)),
        ("hermitian_eig 64x64", lambda k: k.hermitian_eig(h, 60)),
        ("gk_log_integral Beta(100,1900)", lambda k: k.gk_log_integral(0, beta[0][1:], beta[1], 1e-14, 1e-11, 2000)),
        ("time_average_sum D=40", lambda k: k.time_average_sum(f, c, 100.0)),
    ]


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    print(f"{'kernel':34s} {'numba [s]':>12s} {'numpy [s]':>12s} {'speedup':>9s}")
    for name, call in cases():
        call(nb)  # compile
        call(npk)
        t_nb = best_of(lambda: call(nb), args.repeat)
        t_np = best_of(lambda: call(npk), args.repeat)
        print(f"{name:34s} {t_nb:12.5f} {t_np:12.5f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
