"""Contest success functions and how far they stray from winner-takes-all.

A CSF maps the two bids on a battlefield to the probabilities ``(zeta_a, zeta_b)``
that A, respectively B, wins it. Built-in kinds:

* ``blotto``: the higher bid wins, exact ties go to A with probability ``alpha``.
* ``power``:  ``alpha x^R / (alpha x^R + (1 - alpha) y^R)``.
* ``logit``:  ``alpha e^{Rx} / (alpha e^{Rx} + (1 - alpha) e^{Ry})``.
* ``custom``: any vectorizable ``f(x, y) -> zeta_a``; ``zeta_b = 1 - zeta_a``.

The dissimilarity set of a CSF at an opponent bid ``c`` is the set of own bids
``x`` in ``[0, bound]`` where the CSF and the winner-takes-all rule disagree by
at least ``eps``. ``delta_bound`` integrates the equilibrium marginals over
these sets and maximizes over ``c``, yielding the ``delta`` that enters the
lottery-game error bound ``8 delta + 13 eps``. For Lipschitz custom CSFs a
tighter ``2 delta + 5 eps`` bound applies; it is documented, not enforced.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .distributions import MarginalSet, uniform_type_marginals
from .game import ValidatedGame, blotto_shares
from .gamma import GammaSolution, parameter_bounds

KINDS = ("blotto", "power", "logit", "custom")
EXP_CAP = 700.0
BISECT_TOL = 1e-10
Y_GRID = 1000
SAFETY = 1e-6


class CSFError(ValueError):
    pass


@dataclass(frozen=True)
class ContestSuccessFunction:
    kind: str
    alpha: float = 0.5
    R: Optional[float] = None
    func: Optional[Callable] = None
    lipschitz: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise CSFError(f"unknown CSF kind {self.kind!r}; expected one of {KINDS}")
        a = float(self.alpha)
        if self.kind in ("power", "logit"):
            if not (0.0 < a < 1.0):
                raise CSFError(f"{self.kind} CSF needs alpha strictly inside (0, 1), got {a}")
            if self.R is None or not (float(self.R) > 0 and math.isfinite(self.R)):
                raise CSFError(f"{self.kind} CSF needs a positive finite R, got {self.R}")
        elif not (0.0 <= a <= 1.0):
            raise CSFError(f"alpha must lie in [0, 1], got {a}")
        if self.kind == "custom" and not callable(self.func):
            raise CSFError("custom CSF needs a callable func(x, y) -> zeta_a")

    @classmethod
    def blotto(cls, alpha: float = 0.5) -> "ContestSuccessFunction":
        return cls("blotto", alpha)

    @classmethod
    def power(cls, R: float, alpha: float = 0.5) -> "ContestSuccessFunction":
        return cls("power", alpha, float(R))

    @classmethod
    def logit(cls, R: float, alpha: float = 0.5) -> "ContestSuccessFunction":
        return cls("logit", alpha, float(R))

    @classmethod
    def custom(cls, func: Callable, alpha: float = 0.5, lipschitz: bool = False) -> "ContestSuccessFunction":
        """``alpha`` is the tie share of the winner-takes-all rule it is compared with."""
        return cls("custom", alpha, None, func, lipschitz)

    def evaluate(self, x, y):
        """``(zeta_a, zeta_b)`` at bids ``x`` (A) and ``y`` (B); broadcasts."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "blotto":
            za, zb = blotto_shares(x, y, self.alpha)
        elif self.kind == "power":
            za, zb = _power(x, y, self.R, self.alpha)
        elif self.kind == "logit":
            za, zb = _logit(x, y, self.R, self.alpha)
        else:
            za = _call_custom(self.func, x, y)
            zb = 1.0 - za
        if self.kind in ("power", "logit"):
            # equal bids: exactly the tie split, free of the 1 - alpha round-off
            tie = x == y
            za = np.where(tie, self.alpha, za)
            zb = np.where(tie, 1.0 - self.alpha, zb)
        if za.ndim == 0:
            return float(za), float(zb)
        return za, zb

    def swapped(self) -> "ContestSuccessFunction":
        """The same contest seen with the players relabelled."""
        if self.kind != "custom":
            return ContestSuccessFunction(self.kind, 1.0 - self.alpha, self.R)
        f = self.func
        return ContestSuccessFunction.custom(
            lambda x, y: 1.0 - _call_custom(f, np.asarray(y, float), np.asarray(x, float)),
            1.0 - self.alpha,
            self.lipschitz,
        )

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "alpha": self.alpha}
        if self.R is not None:
            d["R"] = self.R
        return d


def _call_custom(func, x, y):
    x, y = np.broadcast_arrays(x, y)
    try:
        out = np.asarray(func(x, y), dtype=float)
        if out.shape != x.shape:
            raise ValueError
    except Exception:
        out = np.vectorize(lambda a, b: float(func(a, b)), otypes=[float])(x, y)
    if not np.all(np.isfinite(out)) or np.any(out < 0) or np.any(out > 1):
        raise CSFError("custom CSF returned a value outside [0, 1]")
    return out


def _power(x, y, R, alpha):
    x, y = np.broadcast_arrays(x, y)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # x >= y: t = (y/x)^R in [0, 1]; x < y: s = (x/y)^R in [0, 1)
        t = np.where(x > 0, (y / np.where(x > 0, x, 1.0)) ** R, 1.0)
        s = np.where(y > 0, (x / np.where(y > 0, y, 1.0)) ** R, 1.0)
    hi = x >= y
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # each branch only matters where it is selected
        da = alpha + (1.0 - alpha) * t
        db = alpha * s + (1.0 - alpha)
        za = np.where(hi, alpha / da, alpha * s / db)
        zb = np.where(hi, (1.0 - alpha) * t / da, (1.0 - alpha) / db)
    return za, zb


def _logit(x, y, R, alpha):
    d = R * (np.asarray(y, float) - np.asarray(x, float))
    e = np.exp(-np.minimum(np.abs(d), EXP_CAP))
    # d >= 0 favours B: zeta_a = alpha e / (alpha e + 1 - alpha) with e = exp(-d)
    pos = d >= 0
    da = alpha * e + (1.0 - alpha)
    db = alpha + (1.0 - alpha) * e
    za = np.where(pos, alpha * e / da, alpha / db)
    zb = np.where(pos, (1.0 - alpha) / da, (1.0 - alpha) * e / db)
    sat = np.abs(d) > EXP_CAP
    za = np.where(sat, np.where(pos, 0.0, 1.0), za)
    zb = np.where(sat, np.where(pos, 1.0, 0.0), zb)
    return za, zb


# -- dissimilarity sets ------------------------------------------------------


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_closed: bool
    hi_closed: bool

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        left = (x >= self.lo) if self.lo_closed else (x > self.lo)
        right = (x <= self.hi) if self.hi_closed else (x < self.hi)
        return left & right

    @property
    def empty(self) -> bool:
        return self.hi < self.lo or (self.hi == self.lo and not (self.lo_closed and self.hi_closed))


@dataclass(frozen=True)
class DissimilaritySet:
    center: float
    singleton: Optional[float] = None
    lower_interval: Optional[Interval] = None
    upper_interval: Optional[Interval] = None

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=bool)
        if self.singleton is not None:
            out |= x == self.singleton
        for iv in (self.lower_interval, self.upper_interval):
            if iv is not None:
                out |= iv.contains(x)
        return out

    @property
    def empty(self) -> bool:
        return self.singleton is None and self.lower_interval is None and self.upper_interval is None


def _check_eps(csf: ContestSuccessFunction, eps: float) -> None:
    cap = min(csf.alpha, 1.0 - csf.alpha)
    if not (0.0 < eps < cap):
        raise CSFError(f"eps must lie in (0, {cap:g}), got {eps}")


def _half_widths(csf: ContestSuccessFunction, eps: float) -> tuple[float, float]:
    """Power: multiplicative factors (below, above); logit: additive half-widths."""
    a, R = csf.alpha, csf.R
    lo_arg = eps * (1 - a) / ((1 - eps) * a)
    hi_arg = (1 - eps) * (1 - a) / (eps * a)
    if csf.kind == "power":
        return lo_arg ** (1.0 / R), hi_arg ** (1.0 / R)
    return -math.log(lo_arg) / R, math.log(hi_arg) / R


def _clip(lo, hi, lo_closed, hi_closed, bound) -> Optional[Interval]:
    lo = max(lo, 0.0)
    if hi > bound:
        hi, hi_closed = bound, True
    iv = Interval(lo, hi, lo_closed, hi_closed)
    return None if iv.empty else iv


def _custom_threshold(f, c: float, eps: float, lo: float, hi: float, rising: bool) -> float:
    """First point of [lo, hi] where the monotone gap ``f`` reaches ``eps``."""
    # rising: gap non-decreasing on [lo, hi]; otherwise non-increasing
    if rising and f(lo) >= eps:
        return lo
    if not rising and f(hi) >= eps:
        return hi
    a, b = lo, hi
    while b - a > BISECT_TOL:
        mid = 0.5 * (a + b)
        inside = f(mid) >= eps
        if inside == rising:
            b = mid
        else:
            a = mid
    return b if rising else a


def dissimilarity_set(csf: ContestSuccessFunction, y_star: float, eps: float, bound: float) -> DissimilaritySet:
    """Own bids in ``[0, bound]`` where ``|zeta_a(x, y_star) - beta_a(x, y_star)| >= eps``."""
    _check_eps(csf, eps)
    c = float(y_star)
    if not (0.0 <= c <= bound):
        raise CSFError(f"y_star must lie in [0, {bound}], got {c}")
    if csf.kind == "blotto":
        return DissimilaritySet(c)
    if csf.kind == "power":
        if c == 0.0:
            return DissimilaritySet(c)
        f_lo, f_hi = _half_widths(csf, eps)
        return DissimilaritySet(
            c,
            lower_interval=_clip(c * f_lo, c, True, False, bound),
            upper_interval=_clip(c, c * f_hi, False, True, bound),
        )
    if csf.kind == "logit":
        h_lo, h_hi = _half_widths(csf, eps)
        lower = _clip(c - h_lo, c, True, False, bound) if c > 0 else None
        return DissimilaritySet(c, lower_interval=lower, upper_interval=_clip(c, c + h_hi, False, True, bound))
    za_tie, _ = csf.evaluate(c, c)
    singleton = c if abs(za_tie - csf.alpha) >= eps else None
    below = lambda x: float(csf.evaluate(x, c)[0])
    above = lambda x: 1.0 - float(csf.evaluate(x, c)[0])
    lower = upper = None
    if c > 0 and below(np.nextafter(c, 0.0)) >= eps:
        lower = Interval(_custom_threshold(below, c, eps, 0.0, c, True), c, True, False)
    if c < bound and above(np.nextafter(c, math.inf)) >= eps:
        upper = Interval(c, _custom_threshold(above, c, eps, c, bound, False), False, True)
    return DissimilaritySet(c, singleton, lower, upper)


# -- delta -------------------------------------------------------------------


@dataclass(frozen=True)
class DeltaBound:
    delta: float
    epsilon: float
    method: str
    argmax_y: float
    argmax_battlefield: int
    argmax_player: str
    closed_form: Optional[float] = None
    closed_form_method: Optional[str] = None
    flagged: bool = False

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "epsilon": self.epsilon,
            "method": self.method,
            "argmax_y": self.argmax_y,
            "argmax_battlefield": self.argmax_battlefield,
            "argmax_player": self.argmax_player,
            "closed_form": self.closed_form,
            "closed_form_method": self.closed_form_method,
            "flagged": self.flagged,
        }


def interval_mass(p0, b, lo, hi, lo_closed) -> np.ndarray:
    """Mass of an atom-at-zero/uniform law on an interval; broadcasts.

    Intervals with ``lo >= hi`` carry no mass unless they are the closed point 0.
    """
    p0, b, lo, hi = np.broadcast_arrays(*(np.asarray(v, float) for v in (p0, b, lo, hi)))
    lo_c = np.clip(lo, 0.0, b)
    hi_c = np.clip(hi, 0.0, b)
    cont = (1.0 - p0) * np.maximum(hi_c - lo_c, 0.0) / b
    atom = np.where((lo <= 0.0) & (hi >= 0.0) & lo_closed, p0, 0.0)
    return cont + atom


def set_mass(p0: float, b: float, s: DissimilaritySet) -> float:
    total = 0.0
    if s.singleton is not None and s.singleton == 0.0:
        total += p0
    for iv in (s.lower_interval, s.upper_interval):
        if iv is not None:
            total += float(interval_mass(p0, b, iv.lo, iv.hi, iv.lo_closed))
    return total


def _side_masses(csf, p0, b, centers, eps, bound):
    """Mass over the dissimilarity set for every (battlefield, center); shape (n, k)."""
    p0 = p0[:, None]
    b = b[:, None]
    c = centers[None, :]
    if csf.kind == "power":
        f_lo, f_hi = _half_widths(csf, eps)
        low = interval_mass(p0, b, c * f_lo, c, True)
        up = interval_mass(p0, b, c, np.minimum(c * f_hi, bound), False)
        return np.where(c > 0, low + up, 0.0)
    if csf.kind == "logit":
        h_lo, h_hi = _half_widths(csf, eps)
        low = np.where(c > 0, interval_mass(p0, b, c - h_lo, c, True), 0.0)
        up = interval_mass(p0, b, c, np.minimum(c + h_hi, bound), False)
        return low + up
    out = np.empty((p0.shape[0], centers.shape[0]))
    for k, ck in enumerate(centers):
        s = dissimilarity_set(csf, float(ck), eps, bound)
        for i in range(p0.shape[0]):
            out[i, k] = set_mass(float(p0[i, 0]), float(b[i, 0]), s)
    return out


def _centers(csf, upper, eps, bound, grid):
    pts = [np.linspace(0.0, bound, grid), [0.0, bound], upper]
    if csf.kind == "power":
        f_lo, f_hi = _half_widths(csf, eps)
        pts += [upper / f_lo, upper / f_hi]
    elif csf.kind == "logit":
        h_lo, h_hi = _half_widths(csf, eps)
        pts += [[h_lo], upper + h_lo, upper - h_hi, [bound - h_hi]]
    c = np.concatenate([np.ravel(np.asarray(p, float)) for p in pts])
    return np.unique(c[(c >= 0.0) & (c <= bound)])


def closed_form_delta(game: ValidatedGame, csf: ContestSuccessFunction, eps: float) -> Optional[float]:
    """``min(1, 2 n lambda_high width w_high / w_low)`` for the power and logit kinds."""
    if csf.kind not in ("power", "logit"):
        return None
    bound = 2.0 * game.budget_b
    width = 0.0
    for side in (csf, csf.swapped()):
        lo, hi = _half_widths(side, eps)
        if csf.kind == "power":
            width = max(width, bound * (1.0 - lo), bound * (hi - 1.0))
        else:
            width = max(width, lo, hi)
    pb = parameter_bounds(game.bounds, game.budget_a, game.budget_b)
    ratio = game.bounds.w_high / game.bounds.w_low
    return min(1.0, 2.0 * game.n * pb.lambda_high * width * ratio)


def delta_bound(
    game: ValidatedGame,
    sol: GammaSolution,
    csf: ContestSuccessFunction,
    eps: float,
    grid: int = Y_GRID,
    marginals: MarginalSet | None = None,
) -> DeltaBound:
    """Numerical ``delta``: the largest equilibrium mass any dissimilarity set can catch."""
    _check_eps(csf, eps)
    ms = marginals if marginals is not None else uniform_type_marginals(game, sol)
    bound = 2.0 * game.budget_b
    flagged = csf.kind == "custom" and not csf.lipschitz
    if flagged:
        warnings.warn("custom CSF is not declared Lipschitz; delta is a grid supremum", stacklevel=2)
    closed = closed_form_delta(game, csf, eps)
    closed_method = {"power": "ClosedFormPower", "logit": "ClosedFormLogit"}.get(csf.kind)
    if csf.kind == "blotto":
        return DeltaBound(0.0, eps, "NumericMax", 0.0, 0, "A", None, None, False)
    best = (-1.0, 0.0, 0, "A")
    # A's bids against a B bid at the center, then B's bids against an A bid
    for player, rule in (("A", csf), ("B", csf.swapped())):
        centers = _centers(rule, ms.upper, eps, bound, grid)
        mass = _side_masses(rule, ms.zero_mass(player), ms.upper, centers, eps, bound)
        i, k = np.unravel_index(int(np.argmax(mass)), mass.shape)
        if mass[i, k] > best[0]:
            best = (float(mass[i, k]), float(centers[k]), int(i), player)
    delta = min(best[0] * (1.0 + SAFETY), 1.0)
    return DeltaBound(delta, eps, "NumericMax", best[1], best[2], best[3], closed, closed_method, flagged)
