"""Best responses to IU play and Monte Carlo exploitability estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

import numpy as np

from . import kernels
from .csf import ContestSuccessFunction
from .distributions import MarginalSet
from .game import ValidatedGame, _player
from .gamma import GammaSolution, residual, RESIDUAL_TOL, NumericalError
from .iu import EmpiricalMarginals, IUSampler, sample_batch
from .rng import RandomStream

DEFAULT_GRID = 201
DEFAULT_SAMPLES = 100_000
PAYOFF_CHUNK = 8192
_KIND_CODE = {"power": 1, "logit": 2}


class Opponent(Protocol):
    def strict_and_tie(self, grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]: ...


@dataclass(frozen=True)
class BestResponseResult:
    allocation: np.ndarray
    value: float
    grid_step: float

    def to_dict(self) -> dict:
        return {"allocation": self.allocation.tolist(), "value": self.value, "grid_step": self.grid_step}


@dataclass(frozen=True)
class ExploitabilityReport:
    player: str
    iu_value: float
    br_value: float
    epsilon_hat: float
    ci_halfwidth: float
    m_samples: int
    grid_points: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "player": self.player,
            "iu_value": self.iu_value,
            "br_value": self.br_value,
            "epsilon_hat": self.epsilon_hat,
            "ci_halfwidth": self.ci_halfwidth,
            "m_samples": self.m_samples,
            "grid_points": self.grid_points,
            "seed": self.seed,
        }


# -- analytic ---------------------------------------------------------------


def _check_solution(game: ValidatedGame, sol: GammaSolution) -> None:
    if abs(residual(game, sol.gamma)) > RESIDUAL_TOL:
        raise NumericalError("solution does not solve the gamma equation for this game")


def _strong_mask(game: ValidatedGame, sol: GammaSolution) -> np.ndarray:
    mask = np.zeros(game.n, dtype=bool)
    mask[list(sol.omega_a)] = True
    return mask


def analytic_br_value_a(game: ValidatedGame, sol: GammaSolution) -> float:
    """A's best payoff against independent draws from B's equilibrium marginals."""
    _check_solution(game, sol)
    va, vb, g = game.norm_a, game.norm_b, sol.gamma
    s = _strong_mask(game, sol)
    total = np.sum(va[s] * (1.0 - g * vb[s] / (2.0 * va[s]))) + np.sum(va[~s] ** 2 / (2.0 * g * vb[~s]))
    return float(game.total_a * total)


def analytic_br_value_b(game: ValidatedGame, sol: GammaSolution) -> float:
    """B's best payoff against independent draws from A's equilibrium marginals."""
    _check_solution(game, sol)
    va, vb, g = game.norm_a, game.norm_b, sol.gamma
    s = _strong_mask(game, sol)
    total = np.sum(g * vb[s] ** 2 / (2.0 * va[s])) + np.sum(vb[~s] * (1.0 - va[~s] / (2.0 * g * vb[~s])))
    return float(game.total_b * total)


def analytic_br_value(game: ValidatedGame, sol: GammaSolution, player: str) -> float:
    return analytic_br_value_a(game, sol) if _player(player) == "A" else analytic_br_value_b(game, sol)


# -- opponents --------------------------------------------------------------


class AnalyticOpponent:
    """Strict-less and tie probabilities of one player's equilibrium marginals."""

    def __init__(self, marginals: MarginalSet, player: str):
        self.marginals = marginals
        self.player = _player(player)

    def strict_and_tie(self, grid):
        grid = np.asarray(grid, dtype=float)
        cdf = self.marginals.cdf(self.player, grid[None, :])
        p0 = self.marginals.zero_mass(self.player)[:, None]
        at_zero = grid[None, :] == 0.0
        less = np.where(grid[None, :] <= 0.0, 0.0, cdf)
        tie = np.where(at_zero, p0, 0.0)
        return less, tie


class CDFOpponent:
    """Adapter for plain CDF callables; left limits are taken one ulp to the left."""

    def __init__(self, cdfs: Sequence[Callable[[np.ndarray], np.ndarray]]):
        self.cdfs = list(cdfs)

    def strict_and_tie(self, grid):
        grid = np.asarray(grid, dtype=float)
        below = np.nextafter(grid, -np.inf)
        at = np.stack([np.broadcast_to(np.asarray(F(grid), float), grid.shape) for F in self.cdfs])
        left = np.stack([np.broadcast_to(np.asarray(F(below), float), grid.shape) for F in self.cdfs])
        left = np.where(grid[None, :] <= 0.0, 0.0, left)
        return left, at - left


# -- discretized best response ----------------------------------------------


def budget_grid(budget: float, grid_points: int) -> np.ndarray:
    if grid_points < 2:
        raise ValueError("grid_points must be at least 2")
    return np.arange(grid_points) * float(budget) / (grid_points - 1)


def best_response_from_gain(gain: np.ndarray, budget: float) -> BestResponseResult:
    """Grid best response given ``gain[i, k]``, the expected payoff of putting ``k`` steps on ``i``."""
    gain = np.ascontiguousarray(gain, dtype=float)
    if not np.all(np.isfinite(gain)):
        raise NumericalError("non-finite entry in the best-response objective")
    G = gain.shape[1]
    value, units = kernels.maxplus_dp(gain)
    step = float(budget) / (G - 1)
    alloc = units * float(budget) / (G - 1)
    return BestResponseResult(alloc, value, step)


def discretized_best_response(
    values,
    opponent_cdfs,
    budget: float,
    grid_points: int = DEFAULT_GRID,
    alpha_term: float = 0.5,
) -> BestResponseResult:
    """Grid best response under winner-takes-all; ties are worth ``alpha_term``.

    ``opponent_cdfs`` is either an object with ``strict_and_tie(grid)`` (such as
    :class:`EmpiricalMarginals`) or a sequence of CDF callables.
    """
    grid = budget_grid(budget, grid_points)
    opp = opponent_cdfs if hasattr(opponent_cdfs, "strict_and_tie") else CDFOpponent(opponent_cdfs)
    try:
        less, tie = opp.strict_and_tie(grid)
    except Exception as exc:
        raise NumericalError(f"opponent CDF evaluation failed: {exc}") from exc
    w = np.asarray(values, dtype=float)
    return best_response_from_gain(w[:, None] * (less + alpha_term * tie), budget)


def expected_share(rule: ContestSuccessFunction, grid: np.ndarray, samples: np.ndarray) -> np.ndarray:
    """Mean of ``zeta_a(grid point, sample)`` per row of ``samples``; shape ``(n, len(grid))``."""
    samples = np.ascontiguousarray(samples, dtype=float)
    grid = np.ascontiguousarray(grid, dtype=float)
    code = _KIND_CODE.get(rule.kind)
    if code is not None:
        return kernels.csf_expectation(code, float(rule.R), float(rule.alpha), grid, samples)
    n, m = samples.shape
    out = np.zeros((n, grid.shape[0]))
    for i in range(n):
        for s in range(0, m, PAYOFF_CHUNK):
            za, _ = rule.evaluate(grid[:, None], samples[i, None, s : s + PAYOFF_CHUNK])
            out[i] += np.asarray(za).sum(axis=1)
    return out / m


def csf_best_response(
    values,
    rule: ContestSuccessFunction,
    opponent: EmpiricalMarginals,
    budget: float,
    grid_points: int = DEFAULT_GRID,
) -> BestResponseResult:
    """Grid best response of the player in A's seat of ``rule`` against sampled opponent bids."""
    grid = budget_grid(budget, grid_points)
    w = np.asarray(values, dtype=float)
    if rule.kind == "blotto":
        less, tie = opponent.strict_and_tie(grid)
        gain = w[:, None] * (less + rule.alpha * tie)
    else:
        gain = w[:, None] * expected_share(rule, grid, opponent.sorted_samples)
    return best_response_from_gain(gain, budget)


# -- exploitability -----------------------------------------------------------


def _paired_payoffs(game, rule, xa, xb):
    pa = np.empty(xa.shape[0])
    pb = np.empty(xa.shape[0])
    for s in range(0, xa.shape[0], PAYOFF_CHUNK):
        za, zb = rule.evaluate(xa[s : s + PAYOFF_CHUNK], xb[s : s + PAYOFF_CHUNK])
        pa[s : s + PAYOFF_CHUNK] = np.asarray(za) @ game.values_a
        pb[s : s + PAYOFF_CHUNK] = np.asarray(zb) @ game.values_b
    return pa, pb


def _ci(x: np.ndarray) -> float:
    if x.shape[0] < 2:
        return 0.0
    return float(1.96 * np.std(x, ddof=1) / math.sqrt(x.shape[0]))


def estimate_exploitability(
    game: ValidatedGame,
    sol: GammaSolution,
    rule: ContestSuccessFunction | None = None,
    m_samples: int = DEFAULT_SAMPLES,
    grid_points: int = DEFAULT_GRID,
    seed: int = 0,
    workers: int = 1,
) -> tuple[ExploitabilityReport, ExploitabilityReport]:
    """How much each player gains by best-responding to the other's IU strategy.

    Labels are internal (A has the smaller budget). ``rule`` defaults to
    winner-takes-all with the game's tie parameter.
    """
    if m_samples < 1 or grid_points < 2:
        raise ValueError("m_samples must be >= 1 and grid_points >= 2")
    rule = rule if rule is not None else ContestSuccessFunction.blotto(game.alpha)
    sampler = IUSampler(game, sol)
    root = RandomStream(seed)
    emp_a, xa = sample_batch(sampler, "A", m_samples, root.split(0), workers)
    emp_b, xb = sample_batch(sampler, "B", m_samples, root.split(1), workers)
    pa, pb = _paired_payoffs(game, rule, xa, xb)
    br_a = csf_best_response(game.values_a, rule, emp_b, game.budget_a, grid_points)
    br_b = csf_best_response(game.values_b, rule.swapped(), emp_a, game.budget_b, grid_points)
    reports = []
    for player, pay, br, total in (("A", pa, br_a, game.total_a), ("B", pb, br_b, game.total_b)):
        iu = float(np.mean(pay))
        reports.append(
            ExploitabilityReport(
                player=player,
                iu_value=iu,
                br_value=br.value,
                epsilon_hat=(br.value - iu) / total,
                ci_halfwidth=_ci(pay),
                m_samples=int(m_samples),
                grid_points=int(grid_points),
                seed=int(seed),
            )
        )
    return reports[0], reports[1]
