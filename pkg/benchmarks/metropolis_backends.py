"""Benchmark the Metropolis chain kernel: numba njit vs pure-numpy fallback.

Run:  python3 benchmarks/metropolis_backends.py [n] [kept]

The two backends consume the same splitmix64 stream, so short runs are
compared for agreement before timing.  The numpy fallback is what you get
with CIRCEDGE_DISABLE_NUMBA=1.
"""

import sys
import time

import numpy as np

from circedge._chains import make_run_sweeps
from circedge.potentials import gww


def _start(n):
    return (2.0 * np.pi * (np.arange(n) + 0.5) / n - np.pi).astype(float)


def run(kernel, n, sweeps, thin, seed=12345):
    lam = _start(n)
    out = np.empty((sweeps // thin, n))
    coeffs = np.asarray(gww().coeffs)
    t0 = time.perf_counter()
    acc, _ = kernel(lam, coeffs, float(n), 0.5, sweeps, thin, out,
                    np.uint64(seed), 0)
    return time.perf_counter() - t0, acc, out


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 16
    kept = int(sys.argv[2]) if len(sys.argv) > 2 else 2000
    sweeps = kept * n

    jit_kernel = make_run_sweeps(use_numba=True)
    py_kernel = make_run_sweeps(use_numba=False)

    # agreement check on a short common stream
    _, acc_j, out_j = run(jit_kernel, n, 50 * n, n)
    _, acc_p, out_p = run(py_kernel, n, 50 * n, n)
    agree = acc_j == acc_p and np.array_equal(out_j, out_p)
    print(f"agreement on short run: {'identical' if agree else 'DIVERGED'}")

    run(jit_kernel, n, n, n)          # warm the JIT before timing
    t_jit, acc, _ = run(jit_kernel, n, sweeps, n)
    updates = sweeps * n
    print(f"numba : {t_jit:8.3f} s  ({updates / t_jit / 1e6:7.2f} M updates/s, "
          f"acceptance {acc / updates:.3f})")
    t_py, acc, _ = run(py_kernel, n, sweeps, n)
    print(f"numpy : {t_py:8.3f} s  ({updates / t_py / 1e6:7.2f} M updates/s, "
          f"acceptance {acc / updates:.3f})")
    print(f"speedup: {t_py / t_jit:.1f}x")


if __name__ == "__main__":
    main()
