"""Max-stable and max-infinitely-divisible laws: sampling, the max-stable
Ornstein-Uhlenbeck semigroup, its generator calculus, functional identities
and the associated processes."""
from .measures import AngularMeasure, MaxStableLaw, cdf, exponent_tail, standard_measure, validate_moment_constraint
from .rng import RngSpec

__version__ = "0.1.0"

__all__ = [
    "AngularMeasure",
    "MaxStableLaw",
    "RngSpec",
    "cdf",
    "exponent_tail",
    "standard_measure",
    "validate_moment_constraint",
    "__version__",
]
