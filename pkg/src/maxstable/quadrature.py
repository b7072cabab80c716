"""Batched composite Gauss-Legendre and tanh-sinh rules.

Integrals here are evaluated for a whole batch of parameter values at once.
Panel edges carry the batch shape in front, so every row may have its own
interval and its own break points.  Integrands receive an array of nodes of
shape ``batch + (m,)`` and must return values of the same shape; because
nodes are plain arrays, integrals nest naturally.

Three coordinate systems cover every integral in the package:

* radial: ``int_a^inf g(r) alpha r^(-alpha-1) dr`` in ``tau = alpha log(r/a)``,
  where the weight becomes ``a^-alpha e^-tau``;
* Frechet: ``E g(sigma Z)`` for ``Z ~ Frechet(alpha)`` in ``v = alpha log(Z)``,
  where the density becomes ``exp(-v - e^-v)``;
* finite radial windows ``int_a^b``, graded toward both ends.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.special import expit


class QuadratureError(ArithmeticError):
    """Raised when node doubling fails to reach the requested tolerance."""

    def __init__(self, message: str, achieved: float = float("nan")):
        super().__init__(message)
        self.achieved = achieved


@dataclass(frozen=True)
class QuadratureSpec:
    nodes: int = 16
    rtol: float = 1e-12
    atol: float = 1e-15
    max_nodes: int = 128
    adaptive: bool = True
    scheme: str = "gauss-legendre"

    def __post_init__(self):
        if self.nodes < 8:
            raise ValueError("at least 8 nodes per panel are required")
        if self.max_nodes < self.nodes:
            raise ValueError("max_nodes must be >= nodes")

    def fixed(self, nodes: int | None = None) -> "QuadratureSpec":
        return replace(self, nodes=nodes or self.nodes, adaptive=False)

    def with_tol(self, rtol: float, atol: float | None = None) -> "QuadratureSpec":
        return replace(self, rtol=rtol, atol=self.atol if atol is None else atol)


DEFAULT = QuadratureSpec()


@dataclass
class QuadResult:
    value: np.ndarray
    error: np.ndarray
    nodes: int


@lru_cache(maxsize=None)
def gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def _panel_rule(edges: np.ndarray, n: int):
    x, w = gauss_legendre(n)
    lo = edges[..., :-1, None]
    hi = edges[..., 1:, None]
    half = 0.5 * (hi - lo)
    nodes = (0.5 * (hi + lo) + half * x).reshape(edges.shape[:-1] + (-1,))
    weights = (half * w).reshape(nodes.shape)
    return nodes, weights


def integrate_panels(fun, edges, spec: QuadratureSpec = DEFAULT, tail_check: bool = False) -> QuadResult:
    """Composite Gauss-Legendre over per-row panels, doubling nodes until stable.

    With ``tail_check`` the last panel must contribute no more than the
    tolerance; this flags integrands that have not decayed by the cut-off.
    """
    edges = np.asarray(edges, dtype=float)
    n = spec.nodes
    prev = None
    while True:
        t, w = _panel_rule(edges, n)
        vals = np.broadcast_to(fun(t), t.shape)
        terms = vals * w
        val = terms.sum(axis=-1)
        if not np.all(np.isfinite(val)):
            raise QuadratureError("non-finite integrand values")
        if tail_check:
            # merged edges may end in zero-width panels; use the last real one
            panels = terms.reshape(terms.shape[:-1] + (-1, n)).sum(axis=-1)
            real = np.diff(edges, axis=-1) > 0
            k = real.shape[-1] - 1 - np.argmax(real[..., ::-1], axis=-1)
            last = np.abs(np.take_along_axis(np.broadcast_to(panels, real.shape), k[..., None], -1)[..., 0])
            bad = last > 1e3 * (spec.atol + spec.rtol * np.abs(val))
            if np.any(bad):
                raise QuadratureError(
                    "integrand has not decayed at the truncation point (divergent integral?)",
                    float(np.max(last)),
                )
        if not spec.adaptive:
            return QuadResult(val, np.full_like(val, np.nan), n)
        if prev is not None:
            err = np.abs(val - prev)
            if np.all(err <= spec.atol + spec.rtol * np.abs(val)):
                return QuadResult(val, err, n)
            if 2 * n > spec.max_nodes:
                worst = float(np.max(err / (spec.atol + spec.rtol * np.abs(val))))
                raise QuadratureError(
                    f"tolerance not met with {n} nodes per panel (error/tolerance = {worst:.3g})",
                    float(np.max(err)),
                )
        prev = val
        n *= 2


def batched(fn, x, rows: int):
    """Apply ``fn`` to ``x`` in flat chunks of ``rows`` entries (bounds memory in nests)."""
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1)
    if flat.size <= rows:
        return np.asarray(fn(x), dtype=float)
    parts = [np.asarray(fn(flat[i:i + rows]), dtype=float) for i in range(0, flat.size, rows)]
    return np.concatenate(parts).reshape(x.shape)


# --- panel layouts ----------------------------------------------------------

def graded(length: float, finest: int = 4) -> np.ndarray:
    """Edges 0, 2^-finest, ..., 1/2, 1, 2, 4, ... up to ``length``."""
    pts = [0.0]
    k = -finest
    while 2.0**k < length:
        pts.append(2.0**k)
        k += 1
    pts.append(float(length))
    return np.array(pts)


def two_sided_fractions(finest: int = 6) -> np.ndarray:
    half = 0.5 * graded(1.0, finest)[:-1]
    return np.concatenate([half, 1.0 - half[::-1]])


def merge_edges(base: np.ndarray, extra: np.ndarray | None, lo, hi) -> np.ndarray:
    """Per-row sorted union of ``base`` and ``extra`` clipped to [lo, hi]."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    shape = np.broadcast_shapes(lo.shape, hi.shape)
    parts = [np.broadcast_to(base, shape + base.shape[-1:])]
    if extra is not None:
        extra = np.asarray(extra, dtype=float)
        parts.append(np.broadcast_to(extra, shape + extra.shape[-1:]))
    e = np.concatenate(parts, axis=-1)
    e = np.clip(e, lo[..., None], hi[..., None])
    e = np.concatenate([lo[..., None] + 0.0 * e[..., :1], e, hi[..., None] + 0.0 * e[..., :1]], axis=-1)
    return np.sort(e, axis=-1)


def tau_max(alpha: float) -> float:
    return float(min(128.0, max(40.0, 500.0 * alpha)))


RADIAL_FINEST = 4


def radial_integral(g, lower, alpha: float, spec: QuadratureSpec = DEFAULT, breaks=None,
                    finest: int = RADIAL_FINEST, tail_check: bool = True):
    """``int_lower^inf g(r) alpha r^(-alpha-1) dr`` for a batch of lower limits.

    ``breaks`` (shape ``batch + (k,)``, in r units) adds panel edges, e.g. at
    jumps of ``g``.
    """
    lower = np.asarray(lower, dtype=float)
    if np.any(lower <= 0):
        raise ValueError("radial integrals need a strictly positive lower limit")
    tmax = tau_max(alpha)
    base = graded(tmax, finest)
    extra = None
    if breaks is not None:
        b = np.asarray(breaks, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            extra = alpha * np.log(b / lower[..., None])
        extra = np.where(np.isfinite(extra), extra, 0.0)
    edges = merge_edges(base, extra, np.zeros(lower.shape), np.full(lower.shape, tmax))
    lo = lower[..., None]

    def fun(tau):
        return g(lo * np.exp(tau / alpha)) * np.exp(-tau)

    res = integrate_panels(fun, edges, spec, tail_check=tail_check)
    return res.value * lower ** (-alpha)


def radial_window(g, a, b, alpha: float, spec: QuadratureSpec = DEFAULT, finest: int = 6):
    """``int_a^b g(r) alpha r^(-alpha-1) dr`` (zero where b <= a)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a, b = np.broadcast_arrays(a, b)
    width = alpha * np.log(np.maximum(b, a) / a)
    fr = two_sided_fractions(finest)
    edges = width[..., None] * fr
    lo = a[..., None]

    def fun(tau):
        return g(lo * np.exp(tau / alpha)) * np.exp(-tau)

    res = integrate_panels(fun, edges, spec)
    return res.value * a ** (-alpha)


V_EDGES = np.array([-8.0, -6.0, -5.0, -4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0,
                    12.0, 16.0, 24.0, 32.0, 48.0, 64.0, 100.0])
V_LO, V_HI = float(V_EDGES[0]), float(V_EDGES[-1])
_NEAR = np.array([0.25, 0.5, 1.0, 2.0])


def frechet_expectation(g, alpha: float, lower=None, upper=None, scale=1.0,
                        spec: QuadratureSpec = DEFAULT, conditional: bool = False, breaks=None):
    """``E[g(sigma Z); lower < sigma Z < upper]`` for ``Z ~ Frechet(alpha)``.

    ``lower``/``upper`` may be batch arrays (None means 0 / infinity).  With
    ``conditional`` the result is divided by ``P(sigma Z < upper)``, computed
    in log space so that tiny probabilities do not underflow.
    """
    scale = np.asarray(scale, dtype=float)
    shape = scale.shape
    if lower is not None:
        lower = np.asarray(lower, dtype=float)
        shape = np.broadcast_shapes(shape, lower.shape)
    if upper is not None:
        upper = np.asarray(upper, dtype=float)
        shape = np.broadcast_shapes(shape, upper.shape)
    scale = np.broadcast_to(scale, shape)
    with np.errstate(divide="ignore"):
        vhi = np.full(shape, V_HI) if upper is None else alpha * np.log(np.broadcast_to(upper, shape) / scale)
        vhi = np.minimum(vhi, V_HI)
        # below this point the (conditional) density is negligible
        vdef = np.minimum(V_LO, vhi - 6.0)
        vlo = vdef if lower is None else np.maximum(alpha * np.log(np.broadcast_to(lower, shape) / scale), vdef)
    vhi = np.maximum(vhi, vlo)
    extra = [vlo[..., None] + _NEAR, vhi[..., None] - _NEAR]
    if breaks is not None:
        b = np.asarray(breaks, dtype=float)
        with np.errstate(divide="ignore"):
            extra.append(alpha * np.log(b / scale[..., None]))
    extra = np.concatenate([np.broadcast_to(e, shape + e.shape[-1:]) for e in extra], axis=-1)
    extra = np.where(np.isfinite(extra), extra, vlo[..., None])
    edges = merge_edges(V_EDGES, extra, vlo, vhi)
    sc = scale[..., None]
    shift = np.exp(-vhi)[..., None] if conditional else 0.0

    def fun(v):
        return g(sc * np.exp(v / alpha)) * np.exp(-v - np.exp(-v) + shift)

    res = integrate_panels(fun, edges, spec)
    return res.value


# --- tanh-sinh on (0, 1) -----------------------------------------------------

def tanh_sinh01(g, shape=(), tol: float = 1e-13, v_min: float = 0.0, t_max: float = 6.0,
                max_level: int = 10) -> QuadResult:
    """Double-exponential rule for ``int_0^1 g(v) dv`` with endpoint singularities.

    Nodes below ``v_min`` are dropped; the caller chooses ``v_min`` so that the
    integrand stays representable there and the omitted mass is negligible.
    """
    prev = None
    for level in range(2, max_level + 1):
        h = 2.0**-level
        k = np.arange(-int(np.ceil(t_max / h)), int(np.ceil(t_max / h)) + 1)
        s = np.pi * np.sinh(k * h)
        v = expit(s)
        vc = expit(-s)
        w = h * np.pi * np.cosh(k * h) * v * vc
        keep = (w > 0) & (v > v_min) & (vc > 0)
        v, w = v[keep], w[keep]
        vals = np.broadcast_to(g(np.broadcast_to(v, tuple(shape) + v.shape)), tuple(shape) + v.shape)
        val = (vals * w).sum(axis=-1)
        if not np.all(np.isfinite(val)):
            raise QuadratureError("non-finite integrand values in tanh-sinh rule")
        if prev is not None:
            err = np.abs(val - prev)
            if np.all(err <= tol * np.maximum(1.0, np.abs(val))):
                return QuadResult(val, err, v.size)
        prev = val
    raise QuadratureError("tanh-sinh rule did not converge", float(np.max(err)))
