"""The Frechet process and the max-stable motion.

Grid simulation uses the exact Markov transitions, so grid marginals carry no
discretization error.  The point-process construction of the Frechet process
is kept as an independent cross-check.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .fields import ScalarField
from .quadrature import DEFAULT, QuadratureSpec, radial_integral
from .rng import RngSpec, as_generator
from .sampling import sample_frechet

PATH_BLOCK = 4096
CUTOFF_BOUND = 1e-6


@dataclass(frozen=True)
class PathSample:
    times: np.ndarray
    values: np.ndarray          # (paths, len(times))
    alpha: float
    x0: np.ndarray              # (paths,)
    rng: RngSpec | None = None
    omission_bound: float = 0.0

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    def at(self, t: float) -> np.ndarray:
        """Values of every path at grid time t."""
        hit = np.nonzero(np.isclose(self.times, t, rtol=0, atol=1e-12))[0]
        if hit.size == 0:
            raise KeyError(f"t = {t} is not a grid point")
        return self.values[:, hit[-1]]

    def envelope_ok(self) -> bool:
        """values >= e^(-t/alpha) x0 with everything positive."""
        floor = np.exp(-(self.times - self.times[0]) / self.alpha)[None, :] * self.x0[:, None]
        return bool(np.all(self.values > 0) and np.all(self.values >= floor * (1 - 1e-12)))


def _grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float).reshape(-1)
    if g.size == 0 or g[0] != 0.0:
        raise ValueError("the time grid must start at 0")
    if np.any(np.diff(g) < 0) or not np.all(np.isfinite(g)):
        raise ValueError("the time grid must be finite and non-decreasing")
    return g


def _x0_array(x0, n_paths, alpha, rng_gen, allow_zero=False):
    if isinstance(x0, str):
        if x0 != "stationary":
            raise ValueError("x0 must be a number, an array or 'stationary'")
        return sample_frechet(alpha, 1.0, rng_gen, n_paths)
    x = np.broadcast_to(np.asarray(x0, dtype=float), (n_paths,)).copy()
    if np.any(x < 0) or (not allow_zero and np.any(x <= 0)):
        raise ValueError("the starting point must be positive")
    return x


def _blocks(n_paths):
    return [(b, s, min(s + PATH_BLOCK, n_paths)) for b, s in enumerate(range(0, n_paths, PATH_BLOCK))]


def _block_gen(rng, b, gen):
    # RngSpec: one key per block; a plain Generator is consumed in order
    return rng.generator(b) if isinstance(rng, RngSpec) else gen


def _run_transitions(alpha, grid, decay, scale, x0, n_paths, rng):
    gen = None if isinstance(rng, RngSpec) else as_generator(rng)
    steps = grid.size - 1
    out = np.empty((n_paths, grid.size))
    for b, s, e in _blocks(n_paths):
        g = _block_gen(rng, b, gen)
        innov = sample_frechet(alpha, 1.0, g, (e - s, steps))
        blk = np.empty((e - s, grid.size))
        _kernels.frechet_path(np.ascontiguousarray(x0[s:e]), decay, scale, innov, blk)
        out[s:e] = blk
    return out


def simulate_frechet_process(alpha: float, x0, grid, rng, n_paths: int = 1) -> PathSample:
    """X_(t+dt) = e^(-dt/alpha) X_t (+) (1 - e^(-dt))^(1/alpha) Z on the grid.

    ``x0`` is a number, an array of starting points or ``'stationary'``.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    g = _grid(grid)
    dt = np.diff(g)
    decay = np.exp(-dt / alpha)
    scale = (-np.expm1(-dt)) ** (1.0 / alpha)
    start_gen = RngSpec(rng.seed, rng.stream).generator(2**32) if isinstance(rng, RngSpec) else as_generator(rng)
    x = _x0_array(x0, n_paths, alpha, start_gen)
    vals = _run_transitions(alpha, g, decay, scale, x, n_paths, rng)
    return PathSample(g, vals, float(alpha), x, rng if isinstance(rng, RngSpec) else None)


def frechet_transition_cdf(alpha: float, x, z, t: float):
    """P(X_t <= z | X_0 = x) = 1{x <= e^(t/alpha) z} exp(-(1 - e^-t) z^-alpha)."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    # compare on the decayed side, as the simulator computes the floor
    return np.where(math.exp(-t / alpha) * x <= z, np.exp(-(-math.expm1(-t)) * z ** (-alpha)), 0.0)


# --- point-process construction --------------------------------------------------------------------

def omission_bound(alpha: float, x0: float, T: float, cutoff: float) -> float:
    """Expected number of omitted points that could move the path.

    A point (s, r) with r <= cutoff matters only if r > e^(-s/alpha) x0, so the
    count is int_0^T (e^s x0^-alpha - cutoff^-alpha)_+ ds.
    """
    if x0 <= 0:
        return float("inf")
    s0 = max(0.0, alpha * math.log(x0 / cutoff))
    if s0 >= T:
        return 0.0
    return float(x0 ** (-alpha) * (math.exp(T) - math.exp(s0)) - cutoff ** (-alpha) * (T - s0))


def default_cutoff(alpha: float, x0: float, T: float) -> float:
    """The largest cutoff with a zero omission bound."""
    return float(x0 * math.exp(-T / alpha))


def simulate_frechet_process_pointwise(alpha: float, x0, T: float, rng, cutoff: float | None = None,
                                       grid=None, n_paths: int = 1) -> PathSample:
    """X_t = e^(-t/alpha) x0 (+) max_(s_i <= t) e^(-(t - s_i)/alpha) r_i from sup-measure points.

    Points below ``cutoff`` are dropped; the run is refused when the omission
    bound exceeds 1e-6.  The default cutoff makes the bound exactly zero.
    """
    if alpha <= 0 or T < 0:
        raise ValueError("need alpha > 0 and T >= 0")
    g = _grid(np.array([0.0, T]) if grid is None else grid)
    if g[-1] > T:
        raise ValueError("grid extends beyond T")
    x = np.broadcast_to(np.asarray(x0, dtype=float), (n_paths,)).copy()
    if np.any(x <= 0):
        raise ValueError("the pointwise construction needs a positive starting point")
    c = default_cutoff(alpha, float(x.min()), T) if cutoff is None else float(cutoff)
    bound = omission_bound(alpha, float(x.min()), T, c)
    if bound > CUTOFF_BOUND:
        raise ValueError(f"cutoff {c:g} too large: omission bound {bound:.3g} > {CUTOFF_BOUND:g}")
    gen = None if isinstance(rng, RngSpec) else as_generator(rng)
    out = np.empty((n_paths, g.size))
    for b, s, e in _blocks(n_paths):
        gb = _block_gen(rng, b, gen)
        m = e - s
        counts = gb.poisson(T * c ** (-alpha), m)
        k = int(counts.sum())
        times = gb.uniform(0.0, T, k)
        radii = c * gb.random(k) ** (-1.0 / alpha)
        path = np.repeat(np.arange(m), counts)
        order = np.lexsort((times, path))
        times, radii = times[order], radii[order]
        offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        gidx = np.searchsorted(g, times, side="left").astype(np.int64)
        keys = times / alpha + np.log(radii)
        blk = np.empty((m, g.size))
        _kernels.pointwise(offsets, gidx, keys, np.log(x[s:e]), g, float(alpha), blk)
        out[s:e] = blk
    return PathSample(g, out, float(alpha), x, rng if isinstance(rng, RngSpec) else None, bound)


# --- max-stable motion --------------------------------------------------------------------------------

def simulate_max_stable_motion(alpha: float, z0, grid, rng, n_paths: int = 1) -> PathSample:
    """Z_(t+dt) = Z_t (+) dt^(1/alpha) F with F ~ Frechet(alpha); z0 = 0 is allowed."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    g = _grid(grid)
    dt = np.diff(g)
    z = np.broadcast_to(np.asarray(z0, dtype=float), (n_paths,)).copy()
    if np.any(z < 0):
        raise ValueError("the starting point must be nonnegative")
    vals = _run_transitions(alpha, g, np.ones_like(dt), dt ** (1.0 / alpha), z, n_paths, rng)
    return PathSample(g, vals, float(alpha), z, rng if isinstance(rng, RngSpec) else None)


def motion_generator_quotient(alpha: float, f: ScalarField, x, dt: float, spec: QuadratureSpec = DEFAULT):
    """(E[f(Z_dt) | Z_0 = x] - f(x)) / dt = int_x^inf (f(z) - f(x)) e^(-dt z^-alpha) dmu(z)."""
    x = np.asarray(x, dtype=float)
    fx = f(x)[..., None]
    return radial_integral(lambda z: (f(z) - fx) * np.exp(-dt * z ** (-alpha)), x, alpha, spec)


def motion_generator_errors(alpha: float, f: ScalarField, x, dts=(1e-2, 1e-3, 1e-4), spec: QuadratureSpec = DEFAULT):
    """Errors against D f(x) = int_x^inf (f(z) - f(x)) dmu(z) and their successive ratios."""
    x = np.asarray(x, dtype=float)
    fx = f(x)[..., None]
    target = radial_integral(lambda z: f(z) - fx, x, alpha, spec)
    errs = np.array([motion_generator_quotient(alpha, f, x, dt, spec) - target for dt in dts])
    return errs, errs[:-1] / errs[1:]


# --- figure data -----------------------------------------------------------------------------------------

FIGURE_ALPHAS = (0.5, 1.0, 2.0, 4.0)
FIGURE_X0 = 3.0
FIGURE_T = 10.0
FIGURE_STEPS = 1000


def figure_paths(alphas=FIGURE_ALPHAS, x0: float = FIGURE_X0, T: float = FIGURE_T, steps: int = FIGURE_STEPS,
                 seed: int = 0, process: str = "frechet") -> list[tuple[float, float, float]]:
    """Rows (alpha, t, x): one path per alpha, path i drawn from stream i of ``seed``."""
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    grid = np.linspace(0.0, T, steps + 1) if steps > 0 else np.array([0.0])
    rows = []
    for i, a in enumerate(alphas):
        rng = RngSpec(seed, i)
        if process == "frechet":
            p = simulate_frechet_process(a, x0, grid, rng)
        elif process == "motion":
            p = simulate_max_stable_motion(a, x0, grid, rng)
        else:
            raise ValueError(f"unknown process {process!r}")
        rows.extend((float(a), float(t), float(v)) for t, v in zip(p.times, p.values[0]))
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["alpha", "t", "x"])
    for a, t, x in rows:
        w.writerow([repr(a), repr(t), repr(x)])
    return buf.getvalue()
