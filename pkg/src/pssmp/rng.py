"""Splittable random streams built on the counter-based Philox generator.

Every random quantity in the package is drawn from a :class:`Stream`
identified by ``(master_seed, key)``. Child streams extend the key, so a
replication's path, its auxiliary limit variables and any later extension
of the path never share random numbers and never depend on execution order.

Key layout used throughout::

    Stream(seed).substream(rep)            one replication
        .substream(PATH, block)            increments of block ``block``
        .substream(WPRIME, block)          W' increments for the Delta surrogate
        .substream(KAPPA)                  kappa_m uniforms for jump terms
        .substream(AUX)                    U and xi_hat_1 draws
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PATH = 0
WPRIME = 1
KAPPA = 2
AUX = 3
ZOOM = 4


@dataclass(frozen=True)
class Stream:
    """Immutable handle for a deterministic random substream."""

    seed: int
    key: tuple[int, ...] = ()

    def __post_init__(self):
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")

    def substream(self, *key: int) -> "Stream":
        return Stream(self.seed, self.key + tuple(int(k) for k in key))

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this substream."""
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.key)
        return np.random.Generator(np.random.Philox(ss))


def as_stream(rng) -> Stream:
    """Accept a Stream or a plain integer seed."""
    if isinstance(rng, Stream):
        return rng
    if isinstance(rng, (int, np.integer)):
        return Stream(int(rng))
    raise TypeError(f"expected Stream or int seed, got {type(rng).__name__}")
