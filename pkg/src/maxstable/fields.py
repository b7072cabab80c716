"""Test functions: the ScalarField type and the built-in catalog.

Univariate fields take arrays of any shape and act elementwise.  Multivariate
fields (``dim >= 2``) take arrays of shape (..., d) and return shape (...).
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

FD_STEP = 1e-5


@dataclass(frozen=True)
class ScalarField:
    func: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray] | None = None
    log_lipschitz: float | None = None
    name: str = "f"
    dim: int = 1
    at_infinity: float | None = None
    jumps: tuple[float, ...] = ()

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.func(x), x.shape if self.dim == 1 else x.shape[:-1])

    @property
    def smooth(self) -> bool:
        return not self.jumps

    def derivative(self, x):
        """Exact gradient when declared, otherwise central differences (h = 1e-5 x)."""
        x = np.asarray(x, dtype=float)
        if self.grad is not None:
            return np.broadcast_to(self.grad(x), x.shape)
        if self.jumps:
            raise ValueError(f"{self.name} is not differentiable")
        if self.dim == 1:
            h = FD_STEP * x
            both = self.func(np.stack([x + h, x - h]))
            return (both[0] - both[1]) / (2 * h)
        out = np.empty_like(x)
        for j in range(self.dim):
            e = np.zeros(self.dim)
            e[j] = 1.0
            h = FD_STEP * x[..., j:j + 1]
            both = self.func(np.stack([x + h * e, x - h * e]))
            out[..., j] = (both[0] - both[1]) / (2 * h[..., 0])
        return out

    def shift(self, c: float, name: str | None = None) -> "ScalarField":
        inf = None if self.at_infinity is None else self.at_infinity + c
        return replace(self, func=lambda x, f=self.func: f(x) + c,
                       name=name or f"{self.name}{c:+g}", at_infinity=inf)

    def scale(self, c: float, name: str | None = None) -> "ScalarField":
        g = None if self.grad is None else (lambda x, g=self.grad: c * g(x))
        inf = None if self.at_infinity is None else c * self.at_infinity
        C = None if self.log_lipschitz is None else abs(c) * self.log_lipschitz
        return replace(self, func=lambda x, f=self.func: c * f(x), grad=g, log_lipschitz=C,
                       name=name or f"{c:g}*{self.name}", at_infinity=inf)

    def affine(self, mean: float, sd: float, name: str | None = None) -> "ScalarField":
        """(f - mean) / sd."""
        return self.shift(-mean).scale(1.0 / sd, name=name or f"std({self.name})")


def check_log_lipschitz(f: ScalarField, points) -> float:
    """Largest x |f'(x)| (or sum_j x^j |d_j f|) over the points; raises if above C."""
    x = np.asarray(points, dtype=float)
    g = f.derivative(x)
    val = np.abs(x * g) if f.dim == 1 else np.abs(x * g).sum(axis=-1)
    worst = float(np.max(val))
    if f.log_lipschitz is not None and worst > f.log_lipschitz * (1 + 1e-12):
        raise ValueError(f"{f.name}: x|f'(x)| = {worst} exceeds declared C = {f.log_lipschitz}")
    return worst


def check_gradient(f: ScalarField, points, rtol: float = 1e-6) -> float:
    """Relative mismatch between the declared gradient and central differences."""
    if f.grad is None:
        raise ValueError(f"{f.name} has no declared gradient")
    x = np.asarray(points, dtype=float)
    fd = replace(f, grad=None).derivative(x)
    ex = f.derivative(x)
    scale = np.maximum(np.abs(ex), 1e-3 * np.max(np.abs(ex)) + 1e-300)
    worst = float(np.max(np.abs(fd - ex) / scale))
    if worst > rtol:
        raise ValueError(f"{f.name}: gradient mismatch {worst:.3g} > {rtol}")
    return worst


# --- catalog ------------------------------------------------------------------

def _log():
    return ScalarField(np.log, lambda x: 1.0 / x, 1.0, "log", at_infinity=np.inf)


def _inv1p():
    return ScalarField(lambda x: 1.0 / (1.0 + x), lambda x: -(1.0 / (1.0 + x)) ** 2, 0.25, "inv1p", at_infinity=0.0)


def _atanlog():
    return ScalarField(lambda x: np.arctan(np.log(x)), lambda x: 1.0 / (x * (1.0 + np.log(x) ** 2)), 1.0,
                       "atanlog", at_infinity=np.pi / 2)


def _ratio():
    return ScalarField(lambda x: x / (1.0 + x), lambda x: (1.0 / (1.0 + x)) ** 2, 0.25, "ratio", at_infinity=1.0)


def _expdecay():
    return ScalarField(lambda x: np.exp(-x), lambda x: -np.exp(-x), float(np.exp(-1.0)), "expdecay",
                       at_infinity=0.0)


def _const1():
    return ScalarField(lambda x: np.ones_like(x), lambda x: np.zeros_like(x), 0.0, "const1", at_infinity=1.0)


def _recip():
    # 1/x - 1: centered at alpha = 1, not log-Lipschitz
    return ScalarField(lambda x: 1.0 / x - 1.0, lambda x: -1.0 / x**2, None, "recip", at_infinity=-1.0)


def indicator(z: float) -> ScalarField:
    """The character h_z = 1{x <= z}; admitted for D only."""
    z = float(z)
    return ScalarField(lambda x: (x <= z).astype(float), None, None, f"h_z:{z:g}", at_infinity=0.0, jumps=(z,))


_BUILDERS = {
    "log": _log,
    "inv1p": _inv1p,
    "atanlog": _atanlog,
    "ratio": _ratio,
    "expdecay": _expdecay,
    "const1": _const1,
    "recip": _recip,
}

SMOOTH_CATALOG = ("log", "inv1p", "atanlog", "ratio", "expdecay", "const1")
# the spec'd names plus the extension; recip is a helper, not a catalog member
CATALOG_NAMES = SMOOTH_CATALOG + ("h_z:<z>",)


def catalog(name: str) -> ScalarField:
    if name.startswith("h_z:"):
        try:
            return indicator(float(name[4:]))
        except ValueError:
            raise KeyError(f"bad character specification {name!r}; use h_z:<z>") from None
    try:
        return _BUILDERS[name]()
    except KeyError:
        raise KeyError(f"unknown function {name!r}; available: {', '.join(CATALOG_NAMES)}") from None


def smooth_catalog() -> list[ScalarField]:
    return [catalog(n) for n in SMOOTH_CATALOG]


def vanishing_catalog() -> list[ScalarField]:
    """Catalog members normalized so that f(inf) = 0 with r f'(r) -> 0 fast enough
    for the divergence identities to be checked by quadrature."""
    return [catalog("inv1p"), catalog("ratio").shift(-1.0, name="ratio-1"), catalog("expdecay")]


def positive_catalog() -> list[ScalarField]:
    """Strictly positive versions of the catalog for entropy inequalities."""
    ratio, inv, atl, ex = catalog("ratio"), catalog("inv1p"), catalog("atanlog"), catalog("expdecay")
    e = float(np.e)
    return [
        ratio.shift(1.0, name="1+ratio"),
        inv.shift(1.0, name="1+inv1p"),
        ScalarField(lambda x: np.exp(np.arctan(np.log(x))),
                    lambda x: np.exp(np.arctan(np.log(x))) / (x * (1 + np.log(x) ** 2)),
                    float(np.exp(np.pi / 2)), "exp(atanlog)", at_infinity=float(np.exp(np.pi / 2))),
        ScalarField(lambda x: np.log(e + x), lambda x: 1.0 / (e + x), 1.0, "log(e+x)", at_infinity=np.inf),
        ex.shift(1.0, name="1+expdecay"),
        catalog("const1"),
    ]


# --- multivariate helpers ----------------------------------------------------------

def coordinate(f: ScalarField, j: int, d: int) -> ScalarField:
    """x -> f(x^j) on R^d."""
    def func(x):
        return f.func(x[..., j])

    grad = None
    if f.grad is not None:
        def grad(x):
            out = np.zeros_like(x)
            out[..., j] = f.grad(x[..., j])
            return out
    return ScalarField(func, grad, f.log_lipschitz, f"{f.name}(x{j + 1})", dim=d,
                       at_infinity=f.at_infinity)


def coordinate_sum(f: ScalarField, d: int) -> ScalarField:
    """x -> sum_j f(x^j)."""
    def func(x):
        return f.func(x).sum(axis=-1)

    grad = None if f.grad is None else (lambda x: f.grad(x))
    C = None if f.log_lipschitz is None else d * f.log_lipschitz
    inf = None if f.at_infinity is None else d * f.at_infinity
    return ScalarField(func, grad, C, f"sum {f.name}", dim=d, at_infinity=inf)
