"""Positive roots of the equilibrium equation for gamma, multipliers and a-priori bounds.

For a trial ``gamma`` let ``strong = {i : v_a[i] / v_b[i] > gamma}`` and

    s1 = sum_{strong} v_b**2 / v_a      s2 = sum_{weak} v_a
    s3 = sum_{strong} v_b               s4 = sum_{weak} v_a**2 / v_b

The equation reads ``(X_B / X_A) * gamma = (gamma**2 s1 + s2) / (s3 + s4 / gamma**2)``.
Between consecutive sorted ratios the strong set is fixed and, after clearing
denominators, the equation becomes the cubic

    X_A s1 g**3 - X_B s3 g**2 + X_A s2 g - X_B s4 = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .game import GameError, ValidatedGame, ValueBounds

RESIDUAL_TOL = 1e-8
DEDUP_RTOL = 1e-10
NEWTON_STEPS = 5


class NumericalError(RuntimeError):
    """A computation that should always succeed did not."""


@dataclass(frozen=True)
class GammaSolution:
    gamma: float
    lambda_a: float
    lambda_b: float
    omega_a: tuple[int, ...]
    residual: float

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "lambda_a": self.lambda_a,
            "lambda_b": self.lambda_b,
            "omega_a": list(self.omega_a),
            "residual": self.residual,
        }


@dataclass(frozen=True)
class ParameterBounds:
    gamma_low: float
    gamma_high: float
    lambda_low: float
    lambda_high: float

    def contains(self, sol: GammaSolution, rtol: float = 1e-12) -> bool:
        lo = lambda v, b: v >= b * (1 - rtol)
        hi = lambda v, b: v <= b * (1 + rtol)
        return (
            lo(sol.gamma, self.gamma_low)
            and hi(sol.gamma, self.gamma_high)
            and all(lo(l, self.lambda_low) and hi(l, self.lambda_high) for l in (sol.lambda_a, sol.lambda_b))
        )


def partial_sums(game: ValidatedGame, strong: np.ndarray) -> tuple[float, float, float, float]:
    va, vb = game.norm_a, game.norm_b
    weak = ~strong
    s1 = float(np.sum(vb[strong] ** 2 / va[strong]))
    s2 = float(np.sum(va[weak]))
    s3 = float(np.sum(vb[strong]))
    s4 = float(np.sum(va[weak] ** 2 / vb[weak]))
    return s1, s2, s3, s4


def strong_set(game: ValidatedGame, gamma: float) -> np.ndarray:
    return game.norm_a / game.norm_b > gamma


def residual(game: ValidatedGame, gamma: float) -> float:
    """Cleared-denominator residual ``(X_B/X_A) g (s3 + s4/g^2) - (g^2 s1 + s2)``.

    Divided by ``|lhs| + |rhs|`` so that the tolerance is scale free and the
    trivial solution ``g -> 0`` of the all-strong branch is not mistaken for a root.
    """
    s1, s2, s3, s4 = partial_sums(game, strong_set(game, gamma))
    k = game.budget_b / game.budget_a
    lhs = k * gamma * (s3 + s4 / gamma**2)
    rhs = gamma**2 * s1 + s2
    return (lhs - rhs) / (abs(lhs) + abs(rhs))


def _real_cubic_roots(a: float, b: float, c: float, d: float) -> list[float]:
    """Real roots of a x^3 + b x^2 + c x + d, generously including near-double roots."""
    scale = max(abs(a), abs(b), abs(c), abs(d))
    if scale == 0:
        return []
    if abs(a) <= 1e-14 * scale:
        if abs(b) <= 1e-14 * scale:
            return [-d / c] if c != 0 else []
        disc = c * c - 4 * b * d
        if disc < 0:
            return [-c / (2 * b)] if disc > -1e-12 * c * c else []
        sq = math.sqrt(disc)
        q = -0.5 * (c + math.copysign(sq, c))
        out = [q / b]
        if q != 0:
            out.append(d / q)
        return out
    B, C, D = b / a, c / a, d / a
    p = C - B * B / 3.0
    q = 2.0 * B**3 / 27.0 - B * C / 3.0 + D
    shift = -B / 3.0
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    mag = max(1.0, abs(B), abs(C), abs(D)) ** 2
    roots = []
    if disc > 0:
        sq = math.sqrt(disc)
        u = np.cbrt(-q / 2.0 + sq)
        v = np.cbrt(-q / 2.0 - sq)
        roots.append(float(u + v) + shift)
    if disc <= 1e-10 * mag:
        if p < 0:
            m = 2.0 * math.sqrt(-p / 3.0)
            arg = 3.0 * q / (p * m)
            theta = math.acos(min(1.0, max(-1.0, arg))) / 3.0
            for k in range(3):
                roots.append(m * math.cos(theta - 2.0 * math.pi * k / 3.0) + shift)
        else:
            r = float(np.cbrt(-q / 2.0))
            roots.extend([2.0 * r + shift, -r + shift])
    return roots


def _polish(coef: tuple[float, float, float, float], x: float) -> float:
    a, b, c, d = coef
    for _ in range(NEWTON_STEPS):
        f = ((a * x + b) * x + c) * x + d
        df = (3 * a * x + 2 * b) * x + c
        if df == 0 or not math.isfinite(df):
            break
        step = f / df
        nx = x - step
        if not math.isfinite(nx) or nx <= 0:
            break
        x = nx
    return x


def solve_gamma(game: ValidatedGame) -> list[GammaSolution]:
    """All distinct positive roots, ascending, each with its multipliers."""
    ratios = np.unique(game.norm_a / game.norm_b)
    xa, xb = game.budget_a, game.budget_b
    if not (np.all(np.isfinite(ratios)) and math.isfinite(xb / xa)):
        raise GameError("non-finite coefficient in the gamma equation")
    edges = np.concatenate(([0.0], ratios, [math.inf]))
    found: list[float] = []
    for j in range(len(edges) - 1):
        lo, hi = edges[j], edges[j + 1]
        # strong set on [lo, hi): every ratio >= hi
        strong = game.norm_a / game.norm_b >= hi
        s1, s2, s3, s4 = partial_sums(game, strong)
        coef = (xa * s1, -xb * s3, xa * s2, -xb * s4)
        if not strong.all():
            cands = _real_cubic_roots(*coef)
        else:
            # no weak battlefield: the cubic is g^2 (X_A s1 g - X_B s3)
            cands = [xb * s3 / (xa * s1)]
        for r in cands:
            if not (math.isfinite(r) and r > 0):
                continue
            r = _polish(coef, r)
            if lo * (1 - 1e-9) <= r <= hi * (1 + 1e-9):
                found.append(r)
    found.sort()
    roots: list[float] = []
    for r in found:
        if roots and abs(r - roots[-1]) <= DEDUP_RTOL * r:
            continue
        # near-boundary roots: keep only if the residual with the true strong set agrees
        if abs(residual(game, r)) <= RESIDUAL_TOL:
            roots.append(r)
    if not roots:
        raise NumericalError("no positive root found for the gamma equation")
    return [lagrange_multipliers(game, g) for g in roots]


def lagrange_multipliers(game: ValidatedGame, gamma: float) -> GammaSolution:
    """Multipliers of the two budget constraints at a root ``gamma``."""
    gamma = float(gamma)
    if not (gamma > 0 and math.isfinite(gamma)):
        raise NumericalError(f"gamma must be positive and finite, got {gamma}")
    res = residual(game, gamma)
    if not abs(res) <= RESIDUAL_TOL:
        raise NumericalError(f"gamma={gamma!r} is not a root (residual {res:.3g})")
    strong = strong_set(game, gamma)
    s1, s2, s3, s4 = partial_sums(game, strong)
    xa, xb = game.budget_a, game.budget_b
    lam_a = gamma**2 / (2 * xb) * s1 + s2 / (2 * xb)
    lam_b = s3 / (2 * xa) + s4 / (2 * gamma**2 * xa)
    return GammaSolution(
        gamma=gamma,
        lambda_a=float(lam_a),
        lambda_b=float(lam_b),
        omega_a=tuple(int(i) for i in np.flatnonzero(strong)),
        residual=float(abs(res)),
    )


def parameter_bounds(bounds: ValueBounds, budget_a: float, budget_b: float) -> ParameterBounds:
    """Box that contains every root and both multipliers for games within ``bounds``."""
    if not (0 < bounds.w_low <= bounds.w_high):
        raise GameError("value bounds must satisfy 0 < w_low <= w_high")
    if not (0 < budget_a <= budget_b):
        raise GameError("budgets must satisfy 0 < budget_a <= budget_b")
    k = budget_b / budget_a
    lo_hi = bounds.w_low / bounds.w_high
    hi_lo = bounds.w_high / bounds.w_low
    g_lo = min(k * lo_hi**4, lo_hi**2)
    g_hi = max(k * hi_lo**4, hi_lo**2)
    base = (1 / (2 * budget_b), 1 / (2 * budget_a))
    l_lo = min(g_lo**2 / (2 * budget_b), *base, 1 / (2 * g_hi**2 * budget_a)) * lo_hi**3
    l_hi = max(g_hi**2 / (2 * budget_b), *base, 1 / (2 * g_lo**2 * budget_a)) * hi_lo**3
    return ParameterBounds(g_lo, g_hi, l_lo, l_hi)
