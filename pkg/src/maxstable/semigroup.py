"""The max-stable Ornstein-Uhlenbeck semigroup and its Psi-conjugates."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fields import ScalarField
from .measures import MaxStableLaw
from .quadrature import DEFAULT, QuadratureSpec, frechet_expectation
from .rng import RngSpec, as_generator
from .sampling import sample_max_stable


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    n: int
    rng: RngSpec | None = None

    def within(self, target: float, k: float = 3.0) -> bool:
        return abs(self.value - target) <= k * self.std_error


def mc_estimate(vals, rng=None) -> McEstimate:
    vals = np.asarray(vals, dtype=float)
    n = vals.size
    se = float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 else float("nan")
    return McEstimate(float(vals.mean()), se, n, rng if isinstance(rng, RngSpec) else None)


def _coefficients(alpha: float, t: float):
    """Decay of the state and scale of the innovation after time t."""
    if alpha == 0:
        return None, math.log(-math.expm1(-t))
    return math.exp(-t / alpha), (-math.expm1(-t)) ** (1.0 / alpha)


def mehler_transition(alpha: float, t: float, x, z):
    """State at time t started from x, given the stationary innovation z."""
    x = np.asarray(x, dtype=float)
    if alpha == 0:
        return np.maximum(x - t, z + math.log(-math.expm1(-t)))
    a, b = _coefficients(alpha, t)
    return np.maximum(a * x, b * z)


def mehler_mc(law: MaxStableLaw, f: ScalarField, t: float, x, n: int = 100_000, rng=None,
              samples=None) -> McEstimate:
    """E f(e^(-t/alpha) x (+) (1-e^(-t))^(1/alpha) Z) by Monte Carlo.

    The Gumbel branch uses (x - t) (+) (Z + log(1 - e^(-t))).  Pass
    ``samples`` to reuse draws of Z (common random numbers).
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    x = np.asarray(x, dtype=float)
    if t == 0:
        v = float(f(x if law.dim > 1 else x.reshape(())))
        return McEstimate(v, 0.0, n, rng if isinstance(rng, RngSpec) else None)
    z = samples if samples is not None else sample_max_stable(law, rng, n)
    if law.dim == 1:
        z = z.reshape(-1)
        x = x.reshape(())
    vals = f(mehler_transition(law.alpha, t, x, z))
    return mc_estimate(vals, rng)


# --- exact univariate semigroup ----------------------------------------------------------

def semigroup_1d(alpha: float, f: ScalarField, t: float, x, spec: QuadratureSpec = DEFAULT):
    """P_t f(x) for d = 1, alpha > 0, by quadrature.

    P_t f(x) = f(a x) exp(-gamma_t x^-alpha) + E[f(b Z); b Z > a x] with
    a = e^(-t/alpha), b = (1 - e^(-t))^(1/alpha), gamma_t = e^t - 1; the second
    term equals gamma_t int_x^inf f(a z) e^(-gamma_t z^-alpha) alpha z^(-alpha-1) dz.
    """
    if alpha <= 0:
        raise ValueError("semigroup_1d needs alpha > 0")
    if t < 0:
        raise ValueError("t must be nonnegative")
    x = np.asarray(x, dtype=float)
    if t == 0:
        return np.array(f(x), dtype=float)
    a, b = _coefficients(alpha, t)
    gam = math.expm1(t)
    head = f(a * x) * np.exp(-gam * x ** (-alpha))
    brk = None
    if f.jumps:
        brk = np.broadcast_to(np.array(f.jumps), x.shape + (len(f.jumps),))
    tail = frechet_expectation(f, alpha, lower=a * x, scale=b, spec=spec, breaks=brk)
    return head + tail


def semigroup_derivative_1d(alpha: float, f: ScalarField, t: float, x):
    """(P_t f)'(x) = e^(-t/alpha) exp(-gamma_t x^-alpha) f'(e^(-t/alpha) x)."""
    if f.grad is None:
        raise ValueError(f"{f.name} has no gradient")
    x = np.asarray(x, dtype=float)
    a = math.exp(-t / alpha)
    return a * np.exp(-math.expm1(t) * x ** (-alpha)) * f.grad(a * x)


def semigroup_field(alpha: float, f: ScalarField, t: float, spec: QuadratureSpec = DEFAULT) -> ScalarField:
    """P_t f as a field, with the closed-form derivative when f has one."""
    grad = None if f.grad is None else (lambda x: semigroup_derivative_1d(alpha, f, t, x))
    jumps = tuple(z * math.exp(t / alpha) for z in f.jumps)
    C = f.log_lipschitz
    return ScalarField(lambda x: semigroup_1d(alpha, f, t, x, spec), grad, C, f"P_{t:g} {f.name}",
                       at_infinity=f.at_infinity, jumps=jumps)


# --- Psi-conjugated families ------------------------------------------------------------------

@dataclass(frozen=True)
class PsiTransform:
    """A monotone bijection from a support onto (0, inf) taking Z to unit Frechet."""

    name: str
    forward: Callable[[np.ndarray], np.ndarray]
    inverse: Callable[[np.ndarray], np.ndarray]
    probe: tuple[float, ...]
    explicit: Callable | None = None   # (t, x, w) -> next state, w the paper's driving noise
    noise: Callable | None = None      # (gen, n) -> driving noise for ``explicit``

    def increasing(self) -> bool:
        y = self.forward(np.asarray(self.probe, dtype=float))
        return bool(np.all(np.diff(y) > 0))

    def check_monotone(self):
        y = self.forward(np.asarray(self.probe, dtype=float))
        dy = np.diff(y)
        if not (np.all(dy > 0) or np.all(dy < 0)):
            raise ValueError(f"transform {self.name!r} is not monotone on its support")


def _uniform_explicit(t, x, u):
    return np.maximum(x ** math.exp(t), u ** (1.0 / -math.expm1(-t)))


def _exponential_explicit(t, x, e):
    return np.minimum(math.exp(t) * x, e / -math.expm1(-t))


def _logistic_explicit(t, x, z):
    # (1 + e^-x)^(e^t); the Frechet-space decay e^-t enters as the power e^t
    left = -np.log(np.expm1(math.exp(t) * np.log1p(np.exp(-x))))
    right = -np.log(np.expm1(1.0 / (-math.expm1(-t) * z)))
    return np.maximum(left, right)


def psi_family(name: str, alpha: float | None = None) -> PsiTransform:
    """Named transforms: power, gumbel, weibull, min_stable_exponential,
    max_id_uniform, max_id_logistic."""
    if name == "power":
        if alpha is None or alpha <= 0:
            raise ValueError("power transform needs alpha > 0")
        return PsiTransform(name, lambda x: x**alpha, lambda y: y ** (1 / alpha), (0.1, 0.5, 1, 2, 10))
    if name == "gumbel":
        return PsiTransform(name, np.exp, np.log, (-3, -1, 0, 1, 3))
    if name == "weibull":
        if alpha is None or alpha >= 0:
            raise ValueError("weibull transform needs alpha < 0")
        return PsiTransform(name, lambda x: (-x) ** alpha, lambda y: -(y ** (1 / alpha)), (-10, -2, -1, -0.5, -0.1))
    if name == "min_stable_exponential":
        return PsiTransform(name, lambda x: 1.0 / x, lambda y: 1.0 / y, (0.1, 0.5, 1, 2, 10),
                            _exponential_explicit, lambda g, n: g.standard_exponential(n))
    if name == "max_id_uniform":
        return PsiTransform(name, lambda x: -1.0 / np.log(x), lambda y: np.exp(-1.0 / y), (0.05, 0.3, 0.5, 0.7, 0.95),
                            _uniform_explicit, lambda g, n: g.random(n))
    if name == "max_id_logistic":
        return PsiTransform(name, lambda x: 1.0 / np.log1p(np.exp(-x)), lambda y: -np.log(np.expm1(1.0 / y)),
                            (-5, -1, 0, 1, 5), _logistic_explicit, lambda g, n: -1.0 / np.log(g.random(n)))
    raise ValueError(f"unknown transform {name!r}")


@dataclass(frozen=True)
class TransformedSemigroup:
    psi: PsiTransform

    def __call__(self, f, t: float, x, n: int = 100_000, rng=None, route: str = "explicit") -> McEstimate:
        """T_psi P_t T_psi^-1 f (x) by Monte Carlo.

        ``route='explicit'`` uses the closed expression for the named families,
        ``route='conjugate'`` maps to the unit Frechet scale and back.
        """
        if t < 0:
            raise ValueError("t must be nonnegative")
        x = float(x)
        if t == 0:
            return McEstimate(float(f(np.asarray(x))), 0.0, n, rng if isinstance(rng, RngSpec) else None)
        gen = as_generator(rng)
        if route == "explicit" and self.psi.explicit is not None:
            w = self.psi.noise(gen, n)
            states = self.psi.explicit(t, x, w)
        else:
            z1 = -1.0 / np.log(gen.random(n))
            y = np.maximum(math.exp(-t) * self.psi.forward(np.asarray(x)), -math.expm1(-t) * z1)
            states = self.psi.inverse(y)
        return mc_estimate(f(states), rng)


def transformed_semigroup(psi, alpha: float | None = None) -> TransformedSemigroup:
    p = psi_family(psi, alpha) if isinstance(psi, str) else psi
    p.check_monotone()
    return TransformedSemigroup(p)


def stationary_sample(psi: PsiTransform, gen: np.random.Generator, n: int):
    """Draws of the stationary law: Psi^-1 of unit Frechet."""
    return psi.inverse(-1.0 / np.log(gen.random(n)))
