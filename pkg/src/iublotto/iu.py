"""IU sampling: independent uniform-type draws rescaled to spend the whole budget."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .distributions import MarginalSet, uniform_type_marginals
from .game import ValidatedGame, _player
from .gamma import GammaSolution
from .rng import RandomStream

BLOCK_ROWS = 4096


@dataclass(frozen=True, eq=False)
class IUSampler:
    game: ValidatedGame
    solution: GammaSolution
    marginals: MarginalSet = field(default=None)

    def __post_init__(self):
        if self.marginals is None:
            object.__setattr__(self, "marginals", uniform_type_marginals(self.game, self.solution))
        elif self.marginals.solution != self.solution:
            raise ValueError("marginals were built from a different solution")


def _normalize(raw: np.ndarray, budget: float) -> np.ndarray:
    total = raw.sum(axis=-1, keepdims=True)
    safe = np.where(total > 0, total, 1.0)
    # all-zero draws stay all-zero
    return np.where(total > 0, budget * raw / safe, 0.0)


def allocations_from_uniforms(sampler: IUSampler, player: str, u: np.ndarray) -> np.ndarray:
    """Map an ``(rows, n)`` array of uniforms to IU allocations by inverse CDF and rescaling."""
    player = _player(player)
    raw = sampler.marginals.quantile(player, np.atleast_2d(u))
    return _normalize(raw, sampler.game.budget(player))


def _draw_block(sampler: IUSampler, player: str, rows: int, rng: RandomStream) -> np.ndarray:
    return allocations_from_uniforms(sampler, player, rng.uniform((rows, sampler.game.n)))


def sample_iu(sampler: IUSampler, player: str, rng: RandomStream) -> np.ndarray:
    """One IU allocation for ``player``."""
    return _draw_block(sampler, _player(player), 1, rng)[0]


@dataclass(frozen=True, eq=False)
class EmpiricalMarginals:
    """Per-battlefield sorted samples; row ``i`` holds battlefield ``i``."""

    sorted_samples: np.ndarray

    @property
    def n(self) -> int:
        return int(self.sorted_samples.shape[0])

    @property
    def m(self) -> int:
        return int(self.sorted_samples.shape[1])

    @classmethod
    def from_allocations(cls, allocations: np.ndarray) -> "EmpiricalMarginals":
        s = np.sort(np.asarray(allocations, dtype=float).T, axis=1)
        s.setflags(write=False)
        return cls(s)

    def _counts(self, grid: np.ndarray, side: str) -> np.ndarray:
        grid = np.asarray(grid, dtype=float)
        return np.stack([np.searchsorted(row, grid, side=side) for row in self.sorted_samples])

    def cdf(self, grid) -> np.ndarray:
        """``P(X_i <= x)`` for every battlefield and grid point, shape ``(n, len(grid))``."""
        return self._counts(grid, "right") / self.m

    def strict_and_tie(self, grid) -> tuple[np.ndarray, np.ndarray]:
        """``(P(X_i < x), P(X_i == x))`` on the grid."""
        left = self._counts(grid, "left")
        right = self._counts(grid, "right")
        return left / self.m, (right - left) / self.m


def sample_batch(
    sampler: IUSampler,
    player: str,
    m: int,
    rng: RandomStream,
    workers: int = 1,
) -> tuple[EmpiricalMarginals, np.ndarray]:
    """``m`` IU allocations as an ``(m, n)`` array plus their empirical marginals.

    Rows come in fixed blocks, block ``k`` drawn from ``rng.split(k)``, so the
    result does not depend on ``workers``.
    """
    player = _player(player)
    m = int(m)
    if m < 1:
        raise ValueError("m must be at least 1")
    starts = list(range(0, m, BLOCK_ROWS))
    out = np.empty((m, sampler.game.n))

    def fill(k: int) -> None:
        s = starts[k]
        rows = min(BLOCK_ROWS, m - s)
        out[s : s + rows] = _draw_block(sampler, player, rows, rng.split(k))

    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, range(len(starts))))
    else:
        for k in range(len(starts)):
            fill(k)
    return EmpiricalMarginals.from_allocations(out), out


def marginal_gap(empirical: EmpiricalMarginals, analytic: MarginalSet, player: str) -> np.ndarray:
    """Sup distance between each empirical CDF and its analytic counterpart."""
    if empirical.n != analytic.n:
        raise ValueError(f"battlefield count mismatch: {empirical.n} vs {analytic.n}")
    p0 = analytic.zero_mass(player)
    gaps = np.empty(empirical.n)
    m = empirical.m
    for i, s in enumerate(empirical.sorted_samples):
        b = analytic.upper[i]
        pts = np.concatenate((s, [0.0, b]))
        right = np.searchsorted(s, pts, side="right") / m
        left = np.searchsorted(s, pts, side="left") / m
        f = np.where(pts < 0, 0.0, np.minimum(1.0, p0[i] + (1.0 - p0[i]) * pts / b))
        f_left = np.where(pts <= 0, 0.0, f)  # the only jump of F is at 0
        gaps[i] = max(np.max(np.abs(right - f)), np.max(np.abs(left - f_left)))
    return gaps
