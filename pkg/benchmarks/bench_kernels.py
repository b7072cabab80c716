"""Time the numba kernels against their numpy fallbacks on identical inputs.

    python3 benchmarks/bench_kernels.py [--n 200000]
"""
import argparse
import time

import numpy as np

from maxstable import _kernels
from maxstable.measures import MaxStableLaw, standard_measure
from maxstable.rng import RngSpec
from maxstable.sampling import _atom_cdf


def best_of(fn, repeat=3):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def lepage_inputs(n, d=3, steps=16, seed=0):
    law = MaxStableLaw(1.0, standard_measure(d, "mixture", 0.3))
    gen = RngSpec(seed).generator()
    exps = gen.standard_exponential((n, steps))
    unif = gen.random((n, steps))
    return exps, unif, _atom_cdf(law), law.scaled_directions(), law.nu.mass


def run_lepage(kernel, inputs, d=3):
    exps, unif, cum, dirs, mass = inputs
    n = exps.shape[0]
    gamma = np.zeros(n)
    z = np.zeros((n, d))
    done = np.zeros(n, dtype=bool)
    npts = np.zeros(n, dtype=np.int64)
    kernel(exps, unif, cum, dirs, mass, gamma, z, done, npts)
    return z


def run_path(kernel, n, steps, seed=1):
    gen = RngSpec(seed).generator()
    innov = -1.0 / np.log(gen.random((n, steps)))
    dt = np.full(steps, 0.01)
    out = np.empty((n, steps + 1))
    kernel(np.full(n, 3.0), np.exp(-dt), -np.expm1(-dt), innov, out)
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--steps", type=int, default=200)
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return

    inputs = lepage_inputs(args.n)
    run_lepage(_kernels.lepage_numba, lepage_inputs(10))  # compile
    a = run_lepage(_kernels.lepage_numba, inputs)
    b = run_lepage(_kernels.lepage_numpy, inputs)
    t_nb = best_of(lambda: run_lepage(_kernels.lepage_numba, inputs))
    t_np = best_of(lambda: run_lepage(_kernels.lepage_numpy, inputs))
    print(f"lepage   n={args.n:>8}  numba {t_nb:8.4f}s  numpy {t_np:8.4f}s  "
          f"speedup {t_np / t_nb:5.1f}x  identical={np.array_equal(a, b)}")

    m = max(args.n // 20, 1)
    run_path(_kernels.frechet_path_numba, 4, 4)
    a = run_path(_kernels.frechet_path_numba, m, args.steps)
    b = run_path(_kernels.frechet_path_numpy, m, args.steps)
    t_nb = best_of(lambda: run_path(_kernels.frechet_path_numba, m, args.steps))
    t_np = best_of(lambda: run_path(_kernels.frechet_path_numpy, m, args.steps))
    print(f"path     n={m:>8}  numba {t_nb:8.4f}s  numpy {t_np:8.4f}s  "
          f"speedup {t_np / t_nb:5.1f}x  identical={np.array_equal(a, b)}")


if __name__ == "__main__":
    main()
