"""Atomic angular measures, max-stable laws and their exponent measures."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MOMENT_TOL = 1e-12


@dataclass(frozen=True)
class ValidationResult:
    passed: bool
    worst_coordinate: int | None
    deviation: float
    message: str

    def __bool__(self):
        return self.passed


@dataclass(frozen=True, eq=False)
class AngularMeasure:
    """Finite atomic measure on the positive sup-norm unit sphere.

    ``weights`` has shape (m,), ``directions`` shape (m, d).  Structural checks
    run on construction; the moment constraint is checked separately by
    :func:`validate_moment_constraint` (a law refuses measures that fail it).
    """

    weights: np.ndarray
    directions: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        u = np.array(self.directions, dtype=float)
        if u.ndim == 1:
            u = u.reshape(len(w), -1) if len(w) else u.reshape(0, 1)
        if u.ndim != 2 or u.shape[0] != w.shape[0]:
            raise ValueError("directions must be an (m, d) array matching the weights")
        if u.shape[1] < 1:
            raise ValueError("dimension must be at least 1")
        if np.any(~np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("atom weights must be finite and strictly positive")
        if np.any(u < 0) or np.any(u > 1):
            raise ValueError("direction entries must lie in [0, 1]")
        if w.size and np.any(u.max(axis=1) != 1.0):
            bad = int(np.flatnonzero(u.max(axis=1) != 1.0)[0])
            raise ValueError(f"atom {bad} is not on the sup-norm sphere (max entry must be exactly 1)")
        w.flags.writeable = False
        u.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "directions", u)

    @property
    def dim(self) -> int:
        return int(self.directions.shape[1])

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    @property
    def atoms(self) -> list[tuple[float, tuple[float, ...]]]:
        return [(float(w), tuple(float(x) for x in u)) for w, u in zip(self.weights, self.directions)]

    @classmethod
    def from_atoms(cls, atoms, dim: int | None = None) -> "AngularMeasure":
        atoms = list(atoms)
        if not atoms:
            return cls(np.zeros(0), np.zeros((0, dim or 1)))
        w = [a[0] for a in atoms]
        u = [list(np.atleast_1d(a[1])) for a in atoms]
        return cls(np.array(w), np.array(u))

    def to_dict(self) -> dict:
        return {"d": self.dim, "norm": "sup",
                "atoms": [{"w": w, "u": list(u)} for w, u in self.atoms]}

    @classmethod
    def from_dict(cls, doc: dict) -> "AngularMeasure":
        if doc.get("norm", "sup") != "sup":
            raise ValueError("only the sup reference norm is supported")
        d = int(doc["d"])
        atoms = [(float(a["w"]), [float(x) for x in a["u"]]) for a in doc["atoms"]]
        for i, (_, u) in enumerate(atoms):
            if len(u) != d:
                raise ValueError(f"atom {i} has {len(u)} coordinates, expected d={d}")
        return cls.from_atoms(atoms, dim=d)

    @classmethod
    def load(cls, path) -> "AngularMeasure":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def __eq__(self, other):
        return (isinstance(other, AngularMeasure)
                and np.array_equal(self.weights, other.weights)
                and np.array_equal(self.directions, other.directions))

    def __hash__(self):
        return hash((self.weights.tobytes(), self.directions.tobytes()))


def validate_moment_constraint(nu: AngularMeasure, tol: float = MOMENT_TOL) -> ValidationResult:
    if nu.weights.size == 0:
        return ValidationResult(False, None, math.inf, "empty atom list")
    moments = nu.weights @ nu.directions
    dev = np.abs(moments - 1.0)
    j = int(np.argmax(dev))
    ok = bool(dev[j] <= tol)
    if ok:
        msg = f"moment constraint holds (worst deviation {dev[j]:.3g} at coordinate {j + 1})"
    else:
        msg = f"moment constraint violated at coordinate {j + 1}: sum w*u = {float(moments[j])!r}, deviation {dev[j]:.3g}"
    return ValidationResult(ok, j + 1, float(dev[j]), msg)


def standard_measure(d: int, kind: str, theta: float | None = None) -> AngularMeasure:
    """Independence, complete dependence, or the mixture theta*dep + (1-theta)*indep."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if kind.startswith("mixture(") and kind.endswith(")"):
        theta = float(kind[len("mixture("):-1])
        kind = "mixture"
    eye = np.eye(d)
    if kind == "independence":
        nu = AngularMeasure(np.ones(d), eye)
    elif kind == "dependence":
        nu = AngularMeasure(np.ones(1), np.ones((1, d)))
    elif kind == "mixture":
        if theta is None or not 0.0 <= theta <= 1.0:
            raise ValueError(f"mixture weight must lie in [0, 1], got {theta!r}")
        atoms = []
        if theta > 0:
            atoms.append((theta, np.ones(d)))
        if theta < 1:
            atoms.extend((1.0 - theta, eye[j]) for j in range(d))
        nu = AngularMeasure.from_atoms(atoms)
    else:
        raise ValueError(f"unknown measure kind {kind!r}")
    check = validate_moment_constraint(nu)
    if not check:
        raise ValueError(check.message)
    return nu


def parse_preset(name: str) -> AngularMeasure:
    """``independence2``, ``dependence3``, ``mixture(0.3)2`` and the like."""
    head = name.rstrip("0123456789")
    digits = name[len(head):]
    if not digits:
        raise ValueError(f"preset {name!r} must end with the dimension, e.g. independence2")
    return standard_measure(int(digits), head)


# --- Psi branches ------------------------------------------------------------

def psi(alpha: float, x):
    """Map the alpha-branch onto the unit Frechet scale."""
    x = np.asarray(x, dtype=float)
    if alpha > 0:
        return np.where(x > 0, np.maximum(x, 0.0) ** alpha, 0.0)
    if alpha == 0:
        return np.exp(x)
    with np.errstate(divide="ignore"):
        return np.where(x < 0, np.abs(np.minimum(x, 0.0)) ** alpha, np.inf)


def psi_inverse(alpha: float, y):
    y = np.asarray(y, dtype=float)
    if alpha > 0:
        return y ** (1.0 / alpha)
    if alpha == 0:
        with np.errstate(divide="ignore"):
            return np.log(y)
    return -(y ** (1.0 / alpha))


@dataclass(frozen=True)
class MaxStableLaw:
    alpha: float
    nu: AngularMeasure

    def __post_init__(self):
        if not math.isfinite(self.alpha):
            raise ValueError("alpha must be finite")
        check = validate_moment_constraint(self.nu)
        if not check:
            raise ValueError(check.message)

    @property
    def dim(self) -> int:
        return self.nu.dim

    @property
    def branch(self) -> str:
        return "frechet" if self.alpha > 0 else ("gumbel" if self.alpha == 0 else "weibull")

    def scaled_directions(self) -> np.ndarray:
        """u^(1/alpha), the directions of the exponent measure's atoms."""
        if self.alpha <= 0:
            raise ValueError("scaled directions exist only on the Frechet branch")
        return self.nu.directions ** (1.0 / self.alpha)


@dataclass(frozen=True)
class ExponentTail:
    value: float
    finite: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "finite", bool(math.isfinite(self.value)))

    def __float__(self):
        return float(self.value)


def exponent_tail_array(law: MaxStableLaw, x) -> np.ndarray:
    """Vectorized mu[0,x]^c on the unit-Frechet scale after the Psi map.

    ``x`` has shape (..., d); the result is +inf where some coordinate sits on
    the lower boundary of the support.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != law.dim:
        raise ValueError(f"expected points of dimension {law.dim}")
    if law.alpha > 0 and np.any(x < 0):
        raise ValueError("exponent tail is defined for nonnegative coordinates only")
    if law.alpha < 0 and np.any(x > 0):
        raise ValueError("Weibull-branch points must be nonpositive")
    y = psi(law.alpha, x)
    u = law.nu.directions
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(u > 0, u / y[..., None, :], 0.0)
    ratio = np.where(np.isnan(ratio), np.inf, ratio)
    per_atom = ratio.max(axis=-1)
    return per_atom @ law.nu.weights if per_atom.ndim == 1 else np.einsum("...k,k->...", per_atom, law.nu.weights)


def exponent_tail(law: MaxStableLaw, x) -> ExponentTail:
    if law.alpha <= 0:
        raise ValueError("exponent_tail is stated for the Frechet branch; use cdf for other branches")
    return ExponentTail(float(exponent_tail_array(law, np.asarray(x, dtype=float).reshape(law.dim))))


def cdf(law: MaxStableLaw, x):
    """F(x) = exp(-mu[0,x]^c); accepts a single point or an (..., d) batch."""
    x = np.asarray(x, dtype=float)
    if law.dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    return np.exp(-exponent_tail_array(law, x))


def homogeneity_check(law: MaxStableLaw, x, t: float) -> float:
    if law.alpha <= 0 or t <= 0:
        raise ValueError("homogeneity needs alpha > 0 and t > 0")
    x = np.asarray(x, dtype=float)
    lhs = exponent_tail_array(law, t ** (1.0 / law.alpha) * x)
    rhs = exponent_tail_array(law, x) / t
    return float(np.max(np.abs(lhs - rhs)))
