"""Benchmark the numba kernels against the pure-numpy fallback.

Runs each hot kernel (advection, diffusion, density/phase rasterization)
with both implementations, checks that the results agree to round-off,
and prints a timing table.  Usage:

    python3 benchmarks/bench_kernels.py [--n 512] [--particles 64]

The env flag PHASEMIX_NO_NUMBA selects the fallback for the whole
package; this script imports both implementations directly so a single
run compares them side by side.
"""

import argparse
import time

import numpy as np

from phasemix import _kernels


def timeit(fn, *args, repeat=5):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_advect(n):
    rng = np.random.default_rng(0)
    vals = rng.random((n, n))
    speeds = rng.normal(size=n)
    h, dt = 0.01, 0.4 * 0.01 / np.abs(speeds).max()

    a = vals.copy()
    _kernels._advect_x_numba(a, speeds, h, dt)
    b = vals.copy()
    _kernels._advect_x_numpy(b, speeds, h, dt)
    assert np.abs(a - b).max() < 1e-13

    t_nb = timeit(lambda: _kernels._advect_x_numba(vals.copy(), speeds, h, dt))
    t_np = timeit(lambda: _kernels._advect_x_numpy(vals.copy(), speeds, h, dt))
    return "advect_x", t_nb, t_np


def bench_diffuse(n):
    rng = np.random.default_rng(1)
    vals = rng.random((n, n))
    a = vals.copy()
    _kernels._diffuse_numba(a, 0.1, 0.2)
    b = vals.copy()
    _kernels._diffuse_numpy(b, 0.1, 0.2)
    assert np.abs(a - b).max() < 1e-13
    t_nb = timeit(lambda: _kernels._diffuse_numba(vals.copy(), 0.1, 0.2))
    t_np = timeit(lambda: _kernels._diffuse_numpy(vals.copy(), 0.1, 0.2))
    return "diffuse", t_nb, t_np


def particle_set(m, rng):
    weights = rng.random(m)
    weights /= weights.sum()
    alphas = rng.normal(size=(m, 2))
    covs = np.empty((m, 2, 2))
    for i in range(m):
        s = rng.uniform(0.2, 0.8)
        c = rng.uniform(-0.1, 0.1)
        covs[i] = [[s, c], [c, (0.25 + c * c) / s]]
    return weights, alphas, covs


def bench_raster_density(n, m):
    rng = np.random.default_rng(2)
    weights, alphas, covs = particle_set(m, rng)
    x = np.linspace(-8, 8, n, endpoint=False)
    a = _kernels._rasterize_density_numba(x, weights, alphas, covs, 1.0)
    b = _kernels._rasterize_density_numpy(x, weights, alphas, covs, 1.0)
    assert np.abs(a - b).max() < 1e-12
    t_nb = timeit(lambda: _kernels._rasterize_density_numba(
        x, weights, alphas, covs, 1.0), repeat=3)
    t_np = timeit(lambda: _kernels._rasterize_density_numpy(
        x, weights, alphas, covs, 1.0), repeat=3)
    return "rasterize_density", t_nb, t_np


def bench_raster_phase(n, m):
    rng = np.random.default_rng(3)
    weights, alphas, covs = particle_set(m, rng)
    x = np.linspace(-8, 8, n, endpoint=False)
    p = np.linspace(-6, 6, n, endpoint=False)
    a = _kernels._rasterize_phase_numba(x, p, weights, alphas, covs)
    b = _kernels._rasterize_phase_numpy(x, p, weights, alphas, covs)
    assert np.abs(a - b).max() < 1e-12
    t_nb = timeit(lambda: _kernels._rasterize_phase_numba(
        x, p, weights, alphas, covs), repeat=3)
    t_np = timeit(lambda: _kernels._rasterize_phase_numpy(
        x, p, weights, alphas, covs), repeat=3)
    return "rasterize_phase", t_nb, t_np


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=512, help="grid side length")
    ap.add_argument("--particles", type=int, default=64,
                    help="particles for the rasterization benchmarks")
    args = ap.parse_args()

    rows = [bench_advect(args.n), bench_diffuse(args.n),
            bench_raster_density(args.n, args.particles),
            bench_raster_phase(args.n, args.particles)]
    print(f"{'kernel':>20s} {'numba [ms]':>12s} {'numpy [ms]':>12s} "
          f"{'speedup':>8s}")
    for name, t_nb, t_np in rows:
        print(f"{name:>20s} {1e3 * t_nb:12.3f} {1e3 * t_np:12.3f} "
              f"{t_np / t_nb:8.2f}")


if __name__ == "__main__":
    main()
