"""Seeded random streams."""

from typing import Tuple

import numpy as np


class RngState:
    """
    A reproducible random stream.

    Identical seeds and identical call sequences produce identical draws.
    `spawn` derives independent child streams from the seed and a key, so
    a sweep cell (for example one (η, seed) pair) can be replayed without
    replaying every draw before it.
    """

    def __init__(self, seed: int, spawn_key: Tuple[int, ...] = ()) -> None:
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.spawn_key = tuple(spawn_key)
        self._sequence = np.random.SeedSequence(self.seed, spawn_key=self.spawn_key)
        self.generator = np.random.Generator(np.random.PCG64(self._sequence))

    @property
    def position(self) -> int:
        """The raw state of the underlying bit generator."""

        return int(self.generator.bit_generator.state["state"]["state"])

    def spawn(self, *key: int) -> "RngState":
        return RngState(self.seed, self.spawn_key + tuple(int(part) for part in key))

    def __repr__(self) -> str:
        return f"RngState(seed={self.seed}, spawn_key={self.spawn_key})"
