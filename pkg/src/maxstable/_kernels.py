"""Hot loops with a numba path and a pure-numpy fallback.

Set ``MAXSTABLE_DISABLE_NUMBA=1`` to force the numpy versions.  Both backends
consume identical pre-drawn random numbers and perform the same floating point
operations, so their outputs agree bit for bit.
"""
from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("MAXSTABLE_DISABLE_NUMBA", "0") not in ("1", "true", "yes")


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


# --- LePage sampler (unit-Frechet scale) -----------------------------------

def lepage_numpy(exps, unif, cum, dirs, mass, gamma, z, done, npts):
    """Advance LePage accumulation for the rows still running.

    Arrays ``gamma``, ``z``, ``done``, ``npts`` are updated in place.  Radii are
    ``mass / Gamma_i`` (the alpha = 1 scale); a row stops at the first radius
    that cannot raise any coordinate of ``z``.
    """
    n_steps = exps.shape[1]
    for k in range(n_steps):
        idx = np.flatnonzero(~done)
        if idx.size == 0:
            break
        g = gamma[idx] + exps[idx, k]
        gamma[idx] = g
        r = mass / g
        stop = r <= z[idx].min(axis=1)
        done[idx[stop]] = True
        keep = ~stop
        go = idx[keep]
        atom = np.searchsorted(cum, unif[go, k], side="right")
        z[go] = np.maximum(z[go], r[keep, None] * dirs[atom])
        npts[go] += 1


def _lepage_loop(exps, unif, cum, dirs, mass, gamma, z, done, npts):
    n, n_steps = exps.shape
    d = z.shape[1]
    m = cum.shape[0]
    for i in range(n):
        if done[i]:
            continue
        for k in range(n_steps):
            g = gamma[i] + exps[i, k]
            gamma[i] = g
            r = mass / g
            zmin = z[i, 0]
            for j in range(1, d):
                if z[i, j] < zmin:
                    zmin = z[i, j]
            if r <= zmin:
                done[i] = True
                break
            u = unif[i, k]
            a = 0
            while a < m - 1 and not cum[a] > u:
                a += 1
            for j in range(d):
                v = r * dirs[a, j]
                if v > z[i, j]:
                    z[i, j] = v
            npts[i] += 1


# --- Frechet process by exact transitions ----------------------------------

def frechet_path_numpy(x0, decay, scale, innov, out):
    """out[:, m+1] = max(decay[m] * out[:, m], scale[m] * innov[:, m])."""
    out[:, 0] = x0
    for m in range(innov.shape[1]):
        out[:, m + 1] = np.maximum(decay[m] * out[:, m], scale[m] * innov[:, m])


def _frechet_path_loop(x0, decay, scale, innov, out):
    n, steps = innov.shape
    for i in range(n):
        x = x0[i]
        out[i, 0] = x
        for m in range(steps):
            a = decay[m] * x
            b = scale[m] * innov[i, m]
            x = a if a >= b else b
            out[i, m + 1] = x


# --- Frechet process from sup-measure points --------------------------------

def pointwise_numpy(offsets, grid_index, keys, log_x0, grid, alpha, out):
    """X_t = exp(max(log x0, max_{s_i <= t} key_i) - t / alpha) per path.

    ``keys`` are ``s_i / alpha + log r_i``; ``grid_index`` is the first grid
    position at or after ``s_i``.
    """
    n_paths, n_grid = out.shape
    best = np.full((n_paths, n_grid), -np.inf)
    counts = np.diff(offsets)
    path = np.repeat(np.arange(n_paths), counts)
    inside = grid_index < n_grid
    np.maximum.at(best, (path[inside], grid_index[inside]), keys[inside])
    best = np.maximum.accumulate(best, axis=1)
    lvl = np.maximum(log_x0[:, None], best)
    out[:] = np.exp(lvl - grid[None, :] / alpha)


def _pointwise_loop(offsets, grid_index, keys, log_x0, grid, alpha, out):
    n_paths, n_grid = out.shape
    for i in range(n_paths):
        run = -np.inf
        p = offsets[i]
        end = offsets[i + 1]
        for m in range(n_grid):
            while p < end and grid_index[p] <= m:
                if keys[p] > run:
                    run = keys[p]
                p += 1
            lvl = log_x0[i] if log_x0[i] >= run else run
            out[i, m] = np.exp(lvl - grid[m] / alpha)


if HAVE_NUMBA:
    lepage_numba = njit(cache=True, nogil=True)(_lepage_loop)
    frechet_path_numba = njit(cache=True, nogil=True)(_frechet_path_loop)
    pointwise_numba = njit(cache=True, nogil=True)(_pointwise_loop)
else:  # pragma: no cover
    lepage_numba = _lepage_loop
    frechet_path_numba = _frechet_path_loop
    pointwise_numba = _pointwise_loop


def lepage(*args):
    return (lepage_numba if USE_NUMBA else lepage_numpy)(*args)


def frechet_path(*args):
    return (frechet_path_numba if USE_NUMBA else frechet_path_numpy)(*args)


def pointwise(*args):
    return (pointwise_numba if USE_NUMBA else pointwise_numpy)(*args)
