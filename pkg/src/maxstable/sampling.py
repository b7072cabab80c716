"""Random generation for extreme-value laws.

The de Haan-LePage sampler is exact: it stops at the first Poisson point whose
radius cannot raise any coordinate of the running maximum, which is decisive
because all directions lie in [0, 1]^d.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels
from .measures import MaxStableLaw, psi_inverse
from .rng import RngSpec, as_generator

BLOCK = 1 << 16
STEPS = 16


# --- univariate laws -------------------------------------------------------------

def _uniforms(rng, size, u):
    if u is not None:
        return np.asarray(u, dtype=float)
    return as_generator(rng).random(size)


def sample_frechet(alpha: float, sigma: float = 1.0, rng=None, size=None, u=None):
    """sigma (-log V)^(-1/alpha); pass ``u`` to force the uniform."""
    if alpha <= 0 or sigma <= 0:
        raise ValueError("Frechet needs alpha > 0 and sigma > 0")
    v = _uniforms(rng, size, u)
    return sigma * (-np.log(v)) ** (-1.0 / alpha)


def sample_gumbel(rng=None, size=None, u=None):
    v = _uniforms(rng, size, u)
    return -np.log(-np.log(v))


def sample_weibull(alpha: float, rng=None, size=None, u=None):
    """Negative Weibull with cdf exp(-(-x)^(-alpha)) on x < 0, alpha < 0."""
    if alpha >= 0:
        raise ValueError("the Weibull branch needs alpha < 0")
    v = _uniforms(rng, size, u)
    return -((-np.log(v)) ** (-1.0 / alpha))


def sample_pareto(alpha: float, rng=None, size=None, u=None):
    """Density alpha y^(-alpha-1) on [1, inf)."""
    if alpha <= 0:
        raise ValueError("Pareto needs alpha > 0")
    v = _uniforms(rng, size, u)
    return v ** (-1.0 / alpha)


# --- de Haan-LePage ----------------------------------------------------------------

@dataclass(frozen=True)
class LePageRealization:
    radii: np.ndarray          # decreasing radii r_i that were used
    atoms: np.ndarray          # atom index of each point
    increments: np.ndarray     # Exp(1) inter-arrival times
    truncation_count: int
    max_value: np.ndarray
    alpha: float

    def extend(self, law: MaxStableLaw, extra_increments, extra_atoms) -> np.ndarray:
        """Maximum after appending further points beyond the stopping index."""
        gam = np.cumsum(np.concatenate([self.increments, np.asarray(extra_increments, float)]))
        atoms = np.concatenate([self.atoms, np.asarray(extra_atoms, int)])
        r = (gam / law.nu.mass) ** (-1.0 / law.alpha)
        pts = r[:, None] * law.scaled_directions()[atoms]
        return pts.max(axis=0)


def _atom_cdf(law: MaxStableLaw) -> np.ndarray:
    cum = np.cumsum(law.nu.weights) / law.nu.mass
    cum[-1] = 1.0
    return cum


def _lepage_block(law: MaxStableLaw, n: int, gen: np.random.Generator, use_numba: bool | None = None):
    d = law.dim
    cum = _atom_cdf(law)
    dirs = np.ascontiguousarray(law.nu.directions)
    mass = law.nu.mass
    gamma = np.zeros(n)
    z = np.zeros((n, d))
    done = np.zeros(n, dtype=bool)
    npts = np.zeros(n, dtype=np.int64)
    kern = _kernels.lepage if use_numba is None else (
        _kernels.lepage_numba if use_numba else _kernels.lepage_numpy)
    rows = np.arange(n)
    while rows.size:
        exps = gen.standard_exponential((rows.size, STEPS))
        unif = gen.random((rows.size, STEPS))
        sub_g, sub_z = gamma[rows], z[rows]
        sub_d, sub_n = done[rows], npts[rows]
        kern(exps, unif, cum, dirs, mass, sub_g, sub_z, sub_d, sub_n)
        gamma[rows], z[rows], done[rows], npts[rows] = sub_g, sub_z, sub_d, sub_n
        rows = rows[~sub_d]
    return z, npts


def sample_unit_scale(law: MaxStableLaw, n: int, rng, threads: int = 1, return_counts: bool = False,
                      use_numba: bool | None = None):
    """n exact draws on the unit-Frechet scale (alpha = 1 radii m / Gamma_i).

    Work is split in fixed blocks of 2^16 rows; with an RngSpec each block
    draws from its own key, so results do not depend on ``threads``.
    """
    n = int(n)
    nblocks = max(1, -(-n // BLOCK))
    sizes = [min(BLOCK, n - b * BLOCK) for b in range(nblocks)] if n else [0]
    if isinstance(rng, RngSpec):
        gens = [rng.generator(b) for b in range(nblocks)]
    else:
        g = as_generator(rng)
        gens = [g] * nblocks
        threads = 1

    def run(b):
        return _lepage_block(law, sizes[b], gens[b], use_numba)

    if threads > 1 and nblocks > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(run, range(nblocks)))
    else:
        parts = [run(b) for b in range(nblocks)]
    z = np.concatenate([p[0] for p in parts]) if parts else np.zeros((0, law.dim))
    counts = np.concatenate([p[1] for p in parts])
    return (z, counts) if return_counts else z


def sample_max_stable(law: MaxStableLaw, rng, n: int | None = None, threads: int = 1,
                      return_realization: bool = False):
    """Exact draws from MS(alpha, nu), shape (n, d) (or (d,) when n is None).

    Other branches are the Psi-images of the unit-scale sample: alpha > 0 takes
    the 1/alpha power, alpha = 0 the logarithm, alpha < 0 the map -y^(1/alpha).
    ``return_realization`` (single draw, alpha > 0) also returns the points.
    """
    if return_realization:
        if n not in (None, 1):
            raise ValueError("realizations are returned for single draws only")
        return _single_realization(law, as_generator(rng))
    y = sample_unit_scale(law, 1 if n is None else n, rng, threads=threads)
    out = y if law.alpha == 1 else psi_inverse(law.alpha, y)
    return out[0] if n is None else out


def _single_realization(law: MaxStableLaw, gen: np.random.Generator):
    if law.alpha <= 0:
        raise ValueError("realizations are defined for alpha > 0")
    cum = _atom_cdf(law)
    dirs = law.scaled_directions()
    m = law.nu.mass
    z = np.zeros(law.dim)
    gam = 0.0
    radii, atoms, incs = [], [], []
    while True:
        e = gen.standard_exponential()
        a = int(np.searchsorted(cum, gen.random(), side="right"))
        gam += e
        r = (gam / m) ** (-1.0 / law.alpha)
        if r <= z.min():
            break
        incs.append(e)
        radii.append(r)
        atoms.append(a)
        z = np.maximum(z, r * dirs[a])
    real = LePageRealization(np.array(radii), np.array(atoms, dtype=int), np.array(incs),
                             len(radii), z, law.alpha)
    return z, real


def sample_with_direction_sampler(alpha: float, mass: float, direction_sampler: Callable, rng, n: int):
    """Approximate-free LePage draws for a continuous angular measure.

    ``direction_sampler(gen, k)`` returns k directions (k, d) on the sup-norm
    sphere, distributed as nu / mass.  The moment constraint cannot be checked
    exactly here; callers are responsible for it ("unchecked").
    """
    gen = as_generator(rng)
    probe = np.asarray(direction_sampler(gen, 1), dtype=float)
    d = probe.shape[-1]
    z = np.zeros((n, d))
    gamma = np.zeros(n)
    rows = np.arange(n)
    while rows.size:
        gamma[rows] += gen.standard_exponential(rows.size)
        r = mass / gamma[rows]
        stop = r <= z[rows].min(axis=1)
        go = rows[~stop]
        u = np.asarray(direction_sampler(gen, go.size), dtype=float)
        if np.any(u < 0) or np.any(u > 1 + 1e-12):
            raise ValueError("direction sampler produced points off the positive sup-norm sphere")
        z[go] = np.maximum(z[go], r[~stop, None] * u)
        rows = go
    return z ** (1.0 / alpha)


# --- max-id functionals of point configurations -------------------------------------

@dataclass(frozen=True)
class MaxIdFunctional:
    maximum: np.ndarray
    value: float | None
    empty: bool


def configuration_max(points, d: int | None = None) -> MaxIdFunctional:
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        dim = d if d is not None else (pts.shape[-1] if pts.ndim == 2 else 1)
        return MaxIdFunctional(np.full(dim, -np.inf), None, True)
    pts = pts.reshape(pts.shape[0], -1)
    return MaxIdFunctional(pts.max(axis=0), None, False)


def sample_max_id_functional(points, f=None, d: int | None = None) -> MaxIdFunctional:
    """f evaluated at the coordinatewise maximum of a finite configuration."""
    m = configuration_max(points, d)
    if m.empty or f is None:
        return m
    x = m.maximum if m.maximum.size > 1 else m.maximum[0]
    return MaxIdFunctional(m.maximum, float(f(x)), False)


def add_point(functional: MaxIdFunctional, y) -> MaxIdFunctional:
    """m(phi + delta_y) = m(phi) (+) y."""
    return MaxIdFunctional(np.maximum(functional.maximum, np.asarray(y, dtype=float)), None, False)


# --- random sup-measures and extremal integrals ------------------------------------------

@dataclass(frozen=True)
class SupMeasurePoints:
    times: np.ndarray
    radii: np.ndarray
    cutoff: float
    horizon: float
    alpha: float


def sample_sup_measure_points(alpha: float, T: float, cutoff: float, rng) -> SupMeasurePoints:
    """Poisson points of intensity ds x alpha r^(-alpha-1) dr on [0,T] x (cutoff, inf)."""
    if alpha <= 0 or T < 0 or cutoff <= 0:
        raise ValueError("need alpha > 0, T >= 0, cutoff > 0")
    gen = as_generator(rng)
    k = gen.poisson(T * cutoff ** (-alpha))
    s = np.sort(gen.uniform(0.0, T, k))
    r = cutoff * gen.random(k) ** (-1.0 / alpha)
    return SupMeasurePoints(s, r, float(cutoff), float(T), float(alpha))


def sup_measure_on_grid(breakpoints, alpha: float, rng, n: int = 1) -> np.ndarray:
    """Independent M_alpha(A_i) ~ Frechet(alpha, |A_i|^(1/alpha)); shape (n, pieces)."""
    b = np.asarray(breakpoints, dtype=float)
    if b.ndim != 1 or b.size < 2 or np.any(np.diff(b) <= 0):
        raise ValueError("breakpoints must be strictly increasing")
    lengths = np.diff(b)
    v = as_generator(rng).random((n, lengths.size))
    return lengths ** (1.0 / alpha) * (-np.log(v)) ** (-1.0 / alpha)


def extremal_integral(values, masses) -> np.ndarray:
    """max_i a_i M(A_i) for a step function with levels a_i."""
    a = np.asarray(values, dtype=float)
    if np.any(a < 0):
        raise ValueError("extremal integrals need a nonnegative integrand")
    return (np.asarray(masses) * a).max(axis=-1)


def sample_extremal_integral(values, breakpoints, alpha: float, rng, n: int | None = None):
    """Draws of the extremal integral of a nonnegative step function."""
    a = np.asarray(values, dtype=float)
    if np.any(a < 0):
        raise ValueError("extremal integrals need a nonnegative integrand")
    m = sup_measure_on_grid(breakpoints, alpha, rng, 1 if n is None else n)
    out = extremal_integral(a, m)
    return out[0] if n is None else out


def extremal_scale(values, breakpoints, alpha: float) -> float:
    """(int f^alpha)^(1/alpha), the Frechet scale of the extremal integral."""
    a = np.asarray(values, dtype=float)
    return float((np.sum(a**alpha * np.diff(breakpoints))) ** (1.0 / alpha))


# --- CSV dump of a realization -----------------------------------------------------------------

def realization_rows(real: LePageRealization, law: MaxStableLaw):
    """Rows (index, r, k, u_1..u_d) of a realization."""
    u = law.nu.directions
    return [(i, float(r), int(k), *map(float, u[k])) for i, (r, k) in enumerate(zip(real.radii, real.atoms))]
