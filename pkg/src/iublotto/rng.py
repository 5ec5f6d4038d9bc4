"""Counter-based, splittable random streams.

A stream is identified by ``(seed, *path)``. Splitting never consumes state, so
the draws obtained from ``RandomStream(seed).split(3, 7)`` are the same no
matter which thread produces them or in which order. Philox keyed through
``numpy.random.SeedSequence`` gives identical output on every platform.
"""

from __future__ import annotations

import numpy as np

_U64 = (1 << 64) - 1


class RandomStream:
    """Deterministic uniform source addressed by ``(seed, stream path)``."""

    __slots__ = ("seed", "path", "_gen")

    def __init__(self, seed: int, *path: int) -> None:
        seed = int(seed)
        if seed < 0 or seed > _U64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = seed
        self.path = tuple(int(p) for p in path)
        ss = np.random.SeedSequence(entropy=seed, spawn_key=self.path)
        self._gen = np.random.Generator(np.random.Philox(ss))

    def split(self, *ids: int) -> "RandomStream":
        """Child stream; independent of how much of this stream was consumed."""
        return RandomStream(self.seed, *self.path, *ids)

    def uniform(self, size=None):
        """Draw from U[0, 1)."""
        return self._gen.random(size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size=size)

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, path={self.path})"


def derive_seed(root: int, *path: int) -> int:
    """64-bit seed for a sub-task, a pure function of ``(root, *path)``."""
    ss = np.random.SeedSequence(entropy=int(root), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
