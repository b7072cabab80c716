"""Generator calculus: D, L = drift + D, L^-1, delta, carre du champ, commutators.

All univariate routines accept batches of points; operators applied to
quadrature-defined fields nest, with the inner integrals run on a fixed rule
(``ctx.inner``) and the outer one adaptive (``ctx.quad``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fields import ScalarField, smooth_catalog, vanishing_catalog
from .measures import MaxStableLaw, standard_measure
from .quadrature import (DEFAULT, QuadratureError, QuadratureSpec, batched, frechet_expectation, integrate_panels,
                         radial_integral, tanh_sinh01)
from .sampling import sample_max_stable
from .semigroup import mc_estimate, semigroup_1d, semigroup_derivative_1d, semigroup_field

INNER = QuadratureSpec(nodes=16, adaptive=False)
NEST_ROWS = 8


@dataclass(frozen=True)
class GeneratorContext:
    law: MaxStableLaw
    quad: QuadratureSpec = DEFAULT
    inner: QuadratureSpec = INNER

    def __post_init__(self):
        if self.law.alpha <= 0:
            raise ValueError("the generator closed forms need alpha > 0; conjugate other branches by Psi")

    @property
    def alpha(self) -> float:
        return float(self.law.alpha)

    @property
    def dim(self) -> int:
        return self.law.dim

    @classmethod
    def univariate(cls, alpha: float, **kw) -> "GeneratorContext":
        return cls(MaxStableLaw(alpha, standard_measure(1, "independence")), **kw)


@dataclass(frozen=True)
class OperatorResidual:
    operator_name: str
    function: str
    max_abs: float
    probe_points: tuple
    tolerance: float
    alpha: float
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.max_abs <= self.tolerance)


# --- jump integrals ---------------------------------------------------------------

def jump_integral(ctx: GeneratorContext, x, phi, spec: QuadratureSpec | None = None, jumps=()):
    """sum_k w_k int phi(x (+) r u_k^(1/alpha), x) alpha r^(-alpha-1) dr over the
    radii where the jump moves x.  ``phi(y, x)`` sees y of shape batch+(m,)
    (d = 1) or batch+(m, d) and x broadcastable against it."""
    spec = spec or ctx.quad
    alpha = ctx.alpha
    x = np.asarray(x, dtype=float)
    if ctx.dim == 1:
        if np.any(x <= 0):
            raise ValueError("points must be strictly inside the support")
        brk = None
        if jumps:
            brk = np.broadcast_to(np.array(jumps, dtype=float), x.shape + (len(jumps),))
        xe = x[..., None]
        return ctx.law.nu.weights[0] * radial_integral(lambda r: phi(r, xe), x, alpha, spec, breaks=brk)
    if x.shape[-1] != ctx.dim or np.any(x <= 0):
        raise ValueError(f"points must be strictly positive {ctx.dim}-vectors")
    total = np.zeros(x.shape[:-1])
    xe = x[..., None, :]
    for w, c in zip(ctx.law.nu.weights, ctx.law.scaled_directions()):
        pos = c > 0
        thr = x[..., pos] / c[pos]
        rstar = thr.min(axis=-1)

        def g(r, c=c):
            return phi(np.maximum(xe, r[..., None] * c), xe)

        total = total + w * radial_integral(g, rstar, alpha, spec, breaks=thr)
    return total


def D_op(ctx: GeneratorContext, f: ScalarField, x, spec: QuadratureSpec | None = None):
    """Max-jump operator D f(x) = int (f(x (+) y) - f(x)) dmu(y)."""
    x = np.asarray(x, dtype=float)
    fx = f(x)[..., None]
    return jump_integral(ctx, x, lambda y, xe: f(y) - fx, spec, f.jumps if ctx.dim == 1 else ())


def D_by_parts(ctx: GeneratorContext, f: ScalarField, x, spec: QuadratureSpec | None = None):
    """D f(x) = int_x^inf f'(s) s^-alpha ds (d = 1, C^1 f).

    Needs only the gradient, which makes it the cheap route for fields whose
    values are themselves integrals (L^-1 f).
    """
    if ctx.dim != 1:
        raise ValueError("the integration-by-parts form is univariate")
    if f.jumps:
        raise ValueError(f"{f.name} is not differentiable")
    spec = spec or ctx.quad
    x = np.asarray(x, dtype=float)
    a = ctx.alpha
    return ctx.law.nu.weights[0] * radial_integral(lambda r: f.derivative(r) * r / a, x, a, spec)


def D_field(ctx: GeneratorContext, f: ScalarField, spec: QuadratureSpec | None = None) -> ScalarField:
    spec = spec or ctx.inner
    return ScalarField(lambda x: D_op(ctx, f, x, spec), None, None, f"D {f.name}", dim=ctx.dim,
                       at_infinity=0.0, jumps=f.jumps)


def drift(ctx: GeneratorContext, f: ScalarField, x):
    """-alpha^-1 <x, grad f(x)>."""
    x = np.asarray(x, dtype=float)
    g = f.derivative(x)
    inner = x * g if ctx.dim == 1 else (x * g).sum(axis=-1)
    return -inner / ctx.alpha


def generator(ctx: GeneratorContext, f: ScalarField, x, spec: QuadratureSpec | None = None,
              route: str = "jump"):
    """L f(x) = -alpha^-1 <x, grad f(x)> + D f(x).

    ``route='by_parts'`` evaluates D through the gradient only (d = 1).
    """
    if f.jumps:
        raise ValueError(f"{f.name} is not differentiable; the generator needs C^1 functions")
    if route == "jump":
        return drift(ctx, f, x) + D_op(ctx, f, x, spec)
    if route == "by_parts":
        return drift(ctx, f, x) + D_by_parts(ctx, f, x, spec)
    raise ValueError(f"unknown route {route!r}")


def generator_field(ctx: GeneratorContext, f: ScalarField, spec: QuadratureSpec | None = None) -> ScalarField:
    spec = spec or ctx.inner
    return ScalarField(lambda x: generator(ctx, f, x, spec), None, None, f"L {f.name}", dim=ctx.dim)


def _overflow_floor(x, alpha):
    # keep x v^(-1/alpha) below 1e250
    return np.min((np.asarray(x, dtype=float) / 1e250) ** alpha)


def generator_pareto_form_1d(alpha: float, f: ScalarField, x, form: str = "alt1", tol: float = 1e-13):
    """Pareto representations of L, integrated over V uniform with Y = V^(-1/alpha).

    alt1: -x f'(x)/alpha + x^-alpha E[f(xY) - f(x)]
    alt2: -x f'(x)/alpha + alpha^-1 x^(1-alpha) E[Y f'(xY)]
    """
    if f.jumps:
        raise ValueError("Pareto forms need a differentiable f")
    x = np.asarray(x, dtype=float)
    xe = x[..., None]
    d0 = -x * f.derivative(x) / alpha
    vmin = _overflow_floor(x, alpha)
    if form == "alt1":
        fx = f(x)[..., None]
        res = tanh_sinh01(lambda v: f(xe * v ** (-1.0 / alpha)) - fx, x.shape, tol, v_min=vmin)
        return d0 + x ** (-alpha) * res.value
    if form == "alt2":
        res = tanh_sinh01(lambda v: v ** (-1.0 / alpha) * f.derivative(xe * v ** (-1.0 / alpha)), x.shape, tol,
                          v_min=vmin)
        return d0 + x ** (1.0 - alpha) * res.value / alpha
    raise ValueError(f"unknown form {form!r}")


def D_pareto_1d(alpha: float, f: ScalarField, x, tol: float = 1e-13):
    """x^-alpha E[f(xY) - f(x)], the jump part by the Pareto route."""
    x = np.asarray(x, dtype=float)
    xe = x[..., None]
    fx = f(x)[..., None]
    res = tanh_sinh01(lambda v: f(xe * v ** (-1.0 / alpha)) - fx, x.shape, tol, v_min=_overflow_floor(x, alpha))
    return x ** (-alpha) * res.value


# --- expectations, centering, inverse ----------------------------------------------------------

def expectation_1d(alpha: float, f: ScalarField, spec: QuadratureSpec = DEFAULT, shape=()):
    brk = None
    if f.jumps:
        brk = np.broadcast_to(np.array(f.jumps, dtype=float), tuple(shape) + (len(f.jumps),))
    return frechet_expectation(f, alpha, scale=np.ones(shape), spec=spec, breaks=brk)


def center(ctx: GeneratorContext, f: ScalarField) -> ScalarField:
    if ctx.dim != 1:
        raise ValueError("quadrature centering is univariate")
    m = float(expectation_1d(ctx.alpha, f, ctx.quad))
    return f.shift(-m, name=f"{f.name}-E")


def _s_edges(depth: int = 48):
    return np.concatenate([[0.0], 2.0 ** -np.arange(depth, -1, -1.0)])


S_DEPTH = 48


def _time_integral(fun, x, spec: QuadratureSpec):
    """int_0^inf fun(t) dt with s = e^(-t/2), graded geometric panels in s."""
    x = np.asarray(x, dtype=float)
    edges = np.broadcast_to(_s_edges(S_DEPTH), x.shape + (S_DEPTH + 2,))

    def g(s):
        t = -2.0 * np.log(s)
        return fun(t) * (2.0 / s)

    return integrate_panels(g, edges, spec).value


def inverse_generator(ctx: GeneratorContext, f: ScalarField, x, spec: QuadratureSpec | None = None,
                      inner: QuadratureSpec | None = None, center_tol: float = 1e-9):
    """L^-1 f(x) = -int_0^inf (P_t f(x) - E f) dt for centered f (d = 1)."""
    if ctx.dim != 1:
        raise ValueError("the quadrature inverse is univariate")
    m = float(expectation_1d(ctx.alpha, f, ctx.quad))
    if abs(m) > center_tol:
        raise ValueError(f"{f.name} is not centered: E f(Z) = {m:.6g}")
    spec = spec or ctx.quad.fixed(16)
    inner = inner or ctx.inner
    alpha = ctx.alpha

    def one(xc):
        xe = xc[..., None]
        return -_time_integral(lambda t: _semigroup_at_times(alpha, f, t, xe, inner), xc, spec)

    return batched(one, x, NEST_ROWS)


def _semigroup_at_times(alpha, f, t, x, spec):
    """P_t f(x) with t varying along the last axis."""
    a = np.exp(-t / alpha)
    b = (-np.expm1(-t)) ** (1.0 / alpha)
    gam = np.expm1(t)
    with np.errstate(over="ignore"):
        head = f(a * x) * np.exp(-gam * x ** (-alpha))
    shape = np.broadcast_shapes(np.shape(t), np.shape(x))
    brk = None
    if f.jumps:
        brk = np.broadcast_to(np.array(f.jumps, dtype=float), shape + (len(f.jumps),))
    tail = frechet_expectation(f, alpha, lower=np.broadcast_to(a * x, shape), scale=np.broadcast_to(b, shape),
                               spec=spec, breaks=brk)
    return head + tail


def inverse_generator_derivative(ctx: GeneratorContext, f: ScalarField, x, spec: QuadratureSpec | None = None):
    """(L^-1 f)'(x) = -int_0^inf (P_t f)'(x) dt with the closed-form derivative."""
    if f.grad is None:
        raise ValueError(f"{f.name} has no gradient")
    spec = spec or ctx.quad
    x = np.asarray(x, dtype=float)
    xe = x[..., None]
    alpha = ctx.alpha

    def dpt(t):
        a = np.exp(-t / alpha)
        with np.errstate(over="ignore"):
            return a * np.exp(-np.expm1(t) * xe ** (-alpha)) * f.grad(a * xe)

    return -_time_integral(dpt, x, spec)


def inverse_generator_field(ctx: GeneratorContext, f: ScalarField, spec=None, inner=None) -> ScalarField:
    grad = None if f.grad is None else (lambda x: inverse_generator_derivative(ctx, f, x, spec))
    return ScalarField(lambda x: inverse_generator(ctx, f, x, spec, inner), grad, None, f"Linv {f.name}")


def inverse_gradient_bound(alpha: float, x, C: float = 1.0, spec: QuadratureSpec = DEFAULT):
    """C int_0^inf exp(-gamma_t x^-alpha) dt, the log-Lipschitz bound for L^-1 f."""
    x = np.asarray(x, dtype=float)
    xe = x[..., None]
    return C * _time_integral(lambda t: np.exp(-np.expm1(t) * xe ** (-alpha)), x, spec)


# --- divergence delta --------------------------------------------------------------------------------

def divergence_delta(alpha: float, f: ScalarField, x):
    """delta_alpha f(x) = alpha^-1 x^(alpha+1) f'(x) + f(x)."""
    x = np.asarray(x, dtype=float)
    return x ** (alpha + 1.0) * f.derivative(x) / alpha + f(x)


def delta_field(alpha: float, f: ScalarField) -> ScalarField:
    return ScalarField(lambda x: divergence_delta(alpha, f, x), None, None, f"delta {f.name}")


# --- carre du champ ---------------------------------------------------------------------------------------

def carre_du_champ(ctx: GeneratorContext, f: ScalarField, g: ScalarField, x, spec: QuadratureSpec | None = None):
    """Gamma(f, g)(x) = 1/2 int (f(x (+) y) - f(x)) (g(x (+) y) - g(x)) dmu(y)."""
    x = np.asarray(x, dtype=float)
    fx = f(x)[..., None]
    gx = g(x)[..., None]
    jumps = tuple(sorted(set(f.jumps) | set(g.jumps))) if ctx.dim == 1 else ()
    return 0.5 * jump_integral(ctx, x, lambda y, xe: (f(y) - fx) * (g(y) - gx), spec, jumps)


def product(f: ScalarField, g: ScalarField) -> ScalarField:
    grad = None
    if f.grad is not None and g.grad is not None:
        grad = lambda x: f.grad(x) * g(x) + f(x) * g.grad(x)  # noqa: E731
    return ScalarField(lambda x: f(x) * g(x), grad, None, f"{f.name}*{g.name}", dim=f.dim,
                       jumps=tuple(sorted(set(f.jumps) | set(g.jumps))))


def dirichlet_form(ctx: GeneratorContext, f: ScalarField, method: str = "quad_1d", n: int = 20_000,
                   rng=None, chunk: int = 4096):
    """E(f) = E[Gamma(f, f)(Z)], by nested quadrature (d = 1) or Monte Carlo over Z."""
    if method == "quad_1d":
        if ctx.dim != 1:
            raise ValueError("quad_1d needs d = 1")
        gam = ScalarField(lambda z: carre_du_champ(ctx, f, f, z, ctx.inner), name="Gamma")
        return float(frechet_expectation(gam, ctx.alpha, spec=ctx.quad))
    if method == "mc":
        z = sample_max_stable(ctx.law, rng, n)
        if ctx.dim == 1:
            z = z.reshape(-1)
        vals = np.concatenate([carre_du_champ(ctx, f, f, z[i:i + chunk]) for i in range(0, n, chunk)])
        return mc_estimate(vals, rng)
    raise ValueError(f"unknown method {method!r}")


# --- generator limit -------------------------------------------------------------------------------------

def generator_limit_errors(ctx: GeneratorContext, f: ScalarField, x, ts=(1e-2, 1e-3, 1e-4)):
    """|(P_t f(x) - f(x)) / t - L f(x)| for each t, with successive ratios."""
    lf = generator(ctx, f, x)
    errs = np.array([(semigroup_1d(ctx.alpha, f, t, x, ctx.quad) - f(x)) / t - lf for t in ts])
    ratios = errs[:-1] / errs[1:]
    return errs, ratios


# --- commutators -----------------------------------------------------------------------------------------------

PROBES = (0.25, 0.5, 1.0, 2.0, 4.0, 8.0)


def _fd(fun, x):
    h = 1e-5 * x
    both = fun(np.stack([x + h, x - h]))
    return (both[0] - both[1]) / (2 * h)


def commutator_residuals(ctx: GeneratorContext, f: ScalarField, which: str, x, t: float | None = None):
    """Pointwise residual of one commutator identity (d = 1)."""
    a = ctx.alpha
    x = np.asarray(x, dtype=float)
    inner = ctx.inner
    if which == "[delta,D]-Id":
        Df = D_field(ctx, f, inner)
        delta_Df = x ** (a + 1) * _fd(Df, x) / a + Df(x)
        return delta_Df - D_op(ctx, delta_field(a, f), x) - f(x)
    if which == "[L,D]-D":
        Df = D_field(ctx, f, inner)
        L_Df = -x * _fd(Df, x) / a + D_op(ctx, Df, x)
        D_Lf = D_op(ctx, generator_field(ctx, f, inner), x)
        return L_Df - D_Lf - D_op(ctx, f, x)
    if which == "[delta,L]-delta":
        Lf = generator_field(ctx, f, inner)
        delta_Lf = x ** (a + 1) * _fd(Lf, x) / a + Lf(x)
        df = delta_field(a, f)
        L_df = -x * _fd(df, x) / a + D_op(ctx, df, x)
        return delta_Lf - L_df - divergence_delta(a, f, x)
    if which == "DP_t-e^-tP_tD":
        Pf = semigroup_field(a, f, t, inner)
        return D_op(ctx, Pf, x) - math.exp(-t) * semigroup_1d(a, D_field(ctx, f, inner), t, x, ctx.quad)
    if which == "deltaP_t-e^tP_tdelta":
        pt = semigroup_1d(a, f, t, x, ctx.quad)
        delta_pt = x ** (a + 1) * semigroup_derivative_1d(a, f, t, x) / a + pt
        return delta_pt - math.exp(t) * semigroup_1d(a, delta_field(a, f), t, x, ctx.quad)
    raise ValueError(f"unknown commutator {which!r}")


ALL_COMMUTATORS = ("[delta,D]-Id", "[L,D]-D", "[delta,L]-delta", "DP_t-e^-tP_tD", "deltaP_t-e^tP_tdelta")
# identities that need f(inf) = 0: others hold on the whole smooth catalog
NEEDS_VANISHING = {"[delta,D]-Id", "[delta,L]-delta", "deltaP_t-e^tP_tdelta"}


def commutator_suite(ctx: GeneratorContext, functions=None, probes=PROBES, ts=(0.1, 1.0), tol: float = 1e-7,
                     which=ALL_COMMUTATORS) -> list[OperatorResidual]:
    """Residuals of the commutator identities over functions x probes.

    By default the divergence identities run on the catalog members that
    vanish at infinity and the others on the whole smooth catalog.
    """
    if ctx.dim != 1:
        raise ValueError("commutators are univariate")
    x = np.asarray(probes, dtype=float)
    out = []
    for name in which:
        fs = functions if functions is not None else (
            vanishing_catalog() if name in NEEDS_VANISHING else smooth_catalog())
        times = ts if "P_t" in name else (None,)
        for f in fs:
            for t in times:
                try:
                    r = commutator_residuals(ctx, f, name, x, t)
                    worst = float(np.max(np.abs(r)))
                    extra = {"residuals": [float(v) for v in r]}
                except QuadratureError as e:
                    worst, extra = float("inf"), {"error": str(e)}
                label = name if t is None else name.replace("P_t", f"P_{t:g}")
                out.append(OperatorResidual(label, f.name, worst, tuple(probes), tol, ctx.alpha, extra))
    return out
