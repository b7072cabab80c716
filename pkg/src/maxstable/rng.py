"""Seed/stream contract for reproducible Monte Carlo.

Every random draw in the package comes from a Philox generator keyed by
``(seed, stream, *extra)``.  Work that is split into blocks derives one key per
block, so the output never depends on how blocks are scheduled.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_U64 = 2**64


@dataclass(frozen=True)
class RngSpec:
    seed: int
    stream: int = 0

    def __post_init__(self):
        for name in ("seed", "stream"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= int(v) < _U64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v!r}")

    def generator(self, *extra: int) -> np.random.Generator:
        key = (int(self.stream),) + tuple(int(e) for e in extra)
        ss = np.random.SeedSequence(int(self.seed), spawn_key=key)
        return np.random.Generator(np.random.Philox(ss))

    def child(self, stream: int) -> "RngSpec":
        """Same seed, different stream."""
        return RngSpec(self.seed, stream)

    def to_dict(self) -> dict:
        return {"seed": int(self.seed), "stream": int(self.stream)}


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngSpec):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError(f"expected RngSpec or numpy Generator, got {type(rng).__name__}")
