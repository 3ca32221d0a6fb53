"""Deterministic seed derivation.

A SeedPath is a master integer plus a path of (label, index) hops. Every
random draw in the package pulls its generator from a SeedPath, so any run is
reproducible from the master seed alone and independent draws stay independent
no matter what order they are evaluated in.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SeedPath:
    master: int
    path: tuple[tuple[str, int], ...] = field(default_factory=tuple)

    def child(self, label: str, index: int = 0) -> "SeedPath":
        if not label:
            raise ValueError("seed path label must be nonempty")
        return SeedPath(self.master, self.path + ((label, int(index)),))

    def describe(self) -> str:
        hops = "/".join(f"{lab}:{idx}" for lab, idx in self.path)
        return f"{self.master}/{hops}" if hops else str(self.master)

    def mixed(self) -> int:
        # 64-bit digest of the canonical path encoding
        h = hashlib.blake2b(digest_size=8)
        h.update(int(self.master).to_bytes(16, "little", signed=True))
        for lab, idx in self.path:
            h.update(lab.encode("utf-8"))
            h.update(b"\x00")
            h.update(int(idx).to_bytes(16, "little", signed=True))
            h.update(b"\x01")
        return int.from_bytes(h.digest(), "little")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.mixed())


def as_generator(seed: "SeedPath | np.random.Generator | int") -> np.random.Generator:
    """Accept a SeedPath, a ready generator, or a bare int."""
    if isinstance(seed, SeedPath):
        return seed.rng()
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(int(seed))
