"""Uniform-type laws: an atom at zero plus a uniform tail, and the per-battlefield marginal pairs."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .game import ValidatedGame, _player
from .gamma import GammaSolution
from .rng import RandomStream


class Role(str, Enum):
    STRONG_A = "StrongA"
    WEAK_A = "WeakA"
    STRONG_B = "StrongB"
    WEAK_B = "WeakB"


@dataclass(frozen=True)
class UniformTypeDistribution:
    """Mixture of a point mass ``mass_at_zero`` at 0 and a uniform law on ``(0, upper]``."""

    mass_at_zero: float
    upper: float
    role: Role

    def __post_init__(self):
        if not (0.0 <= self.mass_at_zero <= 1.0):
            raise ValueError(f"mass_at_zero must lie in [0, 1], got {self.mass_at_zero}")
        if not self.upper > 0:
            raise ValueError(f"upper must be positive, got {self.upper}")

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        p0 = self.mass_at_zero
        out = np.where(x < 0, 0.0, np.minimum(1.0, p0 + (1.0 - p0) * x / self.upper))
        return float(out) if out.ndim == 0 else out

    def quantile(self, u):
        """Inverse CDF used for sampling; ``u`` in [0, 1)."""
        u = np.asarray(u, dtype=float)
        p0 = self.mass_at_zero
        if p0 >= 1.0:
            return np.zeros_like(u) if u.ndim else 0.0
        out = np.where(u < p0, 0.0, self.upper * (u - p0) / (1.0 - p0))
        return float(out) if out.ndim == 0 else out

    def sample(self, rng: RandomStream, size=None):
        return self.quantile(rng.uniform(size))

    def mean(self) -> float:
        return (1.0 - self.mass_at_zero) * self.upper / 2.0

    def to_dict(self) -> dict:
        return {"mass_at_zero": self.mass_at_zero, "upper": self.upper, "role": self.role.value}


@dataclass(frozen=True, eq=False)
class MarginalSet:
    """Equilibrium marginals for every battlefield, stored column-wise.

    Both players share the support ``upper[i]`` on battlefield ``i``; at most
    one of ``zero_a[i]``, ``zero_b[i]`` is positive.
    """

    upper: np.ndarray
    zero_a: np.ndarray
    zero_b: np.ndarray
    strong_a: np.ndarray
    solution: GammaSolution

    @property
    def n(self) -> int:
        return int(self.upper.shape[0])

    def zero_mass(self, player: str) -> np.ndarray:
        return self.zero_a if _player(player) == "A" else self.zero_b

    def marginal(self, player: str, i: int) -> UniformTypeDistribution:
        p = _player(player)
        strong = bool(self.strong_a[i]) == (p == "A")
        role = Role[f"{'STRONG' if strong else 'WEAK'}_{p}"]
        return UniformTypeDistribution(float(self.zero_mass(p)[i]), float(self.upper[i]), role)

    def marginals(self, player: str) -> list[UniformTypeDistribution]:
        return [self.marginal(player, i) for i in range(self.n)]

    def cdf(self, player: str, x) -> np.ndarray:
        """CDF of every battlefield at ``x``; ``x`` broadcasts against shape ``(n, ...)``."""
        x = np.asarray(x, dtype=float)
        shape = (self.n,) + (1,) * max(x.ndim - 1, 0)
        p0 = self.zero_mass(player).reshape(shape)
        b = self.upper.reshape(shape)
        return np.where(x < 0, 0.0, np.minimum(1.0, p0 + (1.0 - p0) * x / b))

    def quantile(self, player: str, u: np.ndarray) -> np.ndarray:
        """Inverse CDF applied column-wise to ``u`` of shape ``(m, n)``."""
        p0 = self.zero_mass(player)
        tail = np.where(p0 < 1.0, 1.0 - p0, 1.0)
        return np.where(u < p0, 0.0, self.upper * (u - p0) / tail)

    def means(self, player: str) -> np.ndarray:
        return (1.0 - self.zero_mass(player)) * self.upper / 2.0

    def to_dict(self) -> dict:
        return {
            "solution": self.solution.to_dict(),
            "A": [d.to_dict() for d in self.marginals("A")],
            "B": [d.to_dict() for d in self.marginals("B")],
        }


def uniform_type_marginals(game: ValidatedGame, sol: GammaSolution) -> MarginalSet:
    """Marginals induced by a root of the gamma equation."""
    reach_a = game.norm_a / sol.lambda_a
    reach_b = game.norm_b / sol.lambda_b
    strong = np.zeros(game.n, dtype=bool)
    strong[list(sol.omega_a)] = True
    upper = np.where(strong, reach_b, reach_a)
    # weak side keeps mass 1 - (smaller reach)/(larger reach) at zero
    zero_b = np.where(strong, 1.0 - reach_b / reach_a, 0.0)
    zero_a = np.where(strong, 0.0, 1.0 - reach_a / reach_b)
    zero_a = np.clip(zero_a, 0.0, 1.0)
    zero_b = np.clip(zero_b, 0.0, 1.0)
    for arr in (upper, zero_a, zero_b, strong):
        arr.setflags(write=False)
    return MarginalSet(upper, zero_a, zero_b, strong, sol)


def prob_all_zero(marginals: MarginalSet, player: str) -> float:
    """Probability that every independent draw of ``player`` is exactly zero."""
    return float(np.prod(marginals.zero_mass(player)))
