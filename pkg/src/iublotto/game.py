"""Game instances, validation and pure-strategy payoffs."""

from __future__ import annotations

import json
import math
import re
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

BUDGET_TOL = 1e-9
GAME_KEYS = ("n", "budget_a", "budget_b", "values_a", "values_b", "alpha")


class GameError(ValueError):
    """Invalid game description."""


class InfeasibleAllocation(ValueError):
    """Allocation with negative entries or over its budget."""


class GameFileError(GameError):
    """A game document could not be parsed; carries the offending key and line."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        loc = []
        if key is not None:
            loc.append(f"key '{key}'")
        if line is not None:
            loc.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(loc)})" if loc else message)
        self.key = key
        self.line = line


@dataclass(frozen=True)
class GameSpec:
    """Raw, caller-labelled description of a game."""

    n: int
    budget_a: float
    budget_b: float
    values_a: tuple[float, ...]
    values_b: tuple[float, ...]
    alpha: float = 0.5

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "budget_a": self.budget_a,
            "budget_b": self.budget_b,
            "values_a": list(self.values_a),
            "values_b": list(self.values_b),
            "alpha": self.alpha,
        }


@dataclass(frozen=True)
class ValueBounds:
    w_low: float
    w_high: float

    def __post_init__(self):
        if not (0 < self.w_low <= self.w_high and math.isfinite(self.w_high)):
            raise GameError(f"invalid value bounds: w_low={self.w_low}, w_high={self.w_high}")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ValidatedGame:
    """A checked game in internal labels, where player A has the smaller budget.

    ``swapped`` is True when the caller's A and B were exchanged to get there.
    The tie parameter is then ``1 - alpha`` of the caller's, so that ties still
    pay the same player.
    """

    budget_a: float
    budget_b: float
    values_a: np.ndarray
    values_b: np.ndarray
    alpha: float
    swapped: bool = False
    total_a: float = field(init=False)
    total_b: float = field(init=False)
    norm_a: np.ndarray = field(init=False, repr=False)
    norm_b: np.ndarray = field(init=False, repr=False)
    bounds: ValueBounds = field(init=False, repr=False)

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "values_a", _frozen(self.values_a))
        set_(self, "values_b", _frozen(self.values_b))
        set_(self, "total_a", float(np.sum(self.values_a)))
        set_(self, "total_b", float(np.sum(self.values_b)))
        set_(self, "norm_a", _frozen(self.values_a / self.total_a))
        set_(self, "norm_b", _frozen(self.values_b / self.total_b))
        lo = float(min(self.values_a.min(), self.values_b.min()))
        hi = float(max(self.values_a.max(), self.values_b.max()))
        set_(self, "bounds", ValueBounds(lo, hi))

    @property
    def n(self) -> int:
        return int(self.values_a.shape[0])

    def budget(self, player: str) -> float:
        return self.budget_a if _player(player) == "A" else self.budget_b

    def values(self, player: str) -> np.ndarray:
        return self.values_a if _player(player) == "A" else self.values_b

    def total(self, player: str) -> float:
        return self.total_a if _player(player) == "A" else self.total_b

    def caller_player(self, player: str) -> str:
        """Caller's label for an internal player (and vice versa)."""
        p = _player(player)
        if not self.swapped:
            return p
        return "B" if p == "A" else "A"

    def to_spec(self) -> GameSpec:
        """Caller-labelled spec that validates back to this game."""
        a, b, va, vb, al = self.budget_a, self.budget_b, self.values_a, self.values_b, self.alpha
        if self.swapped:
            a, b, va, vb, al = b, a, vb, va, 1.0 - al
        return GameSpec(self.n, a, b, tuple(map(float, va)), tuple(map(float, vb)), al)


def _player(player: str) -> str:
    p = str(player).upper()
    if p not in ("A", "B"):
        raise ValueError(f"player must be 'A' or 'B', got {player!r}")
    return p


def validate_game(raw: GameSpec | Mapping[str, Any]) -> ValidatedGame:
    """Check a raw game and return it in internal labels (X_A <= X_B)."""
    if isinstance(raw, Mapping):
        raw = spec_from_mapping(raw)
    va = np.asarray(raw.values_a, dtype=float).ravel()
    vb = np.asarray(raw.values_b, dtype=float).ravel()
    n = int(raw.n)
    if n < 2:
        raise GameError(f"need at least 2 battlefields, got n={n}")
    if va.shape[0] != n or vb.shape[0] != n:
        raise GameError(
            f"value vectors must have length n={n}, got {va.shape[0]} and {vb.shape[0]}"
        )
    for name, v in (("values_a", va), ("values_b", vb)):
        if not np.all(np.isfinite(v)):
            raise GameError(f"{name} contains a non-finite value")
        if np.any(v <= 0):
            raise GameError(f"{name} contains a non-positive value")
    xa, xb, alpha = float(raw.budget_a), float(raw.budget_b), float(raw.alpha)
    for name, x in (("budget_a", xa), ("budget_b", xb)):
        if not (math.isfinite(x) and x > 0):
            raise GameError(f"{name} must be positive and finite, got {x}")
    if not (0.0 <= alpha <= 1.0):
        raise GameError(f"alpha must lie in [0, 1], got {alpha}")
    if not (math.isfinite(va.sum()) and math.isfinite(vb.sum())):
        raise GameError("total battlefield value overflows")
    if n < 3:
        warnings.warn("games with fewer than 3 battlefields are outside the usual model", stacklevel=2)
    if xa > xb:
        return ValidatedGame(xb, xa, vb, va, 1.0 - alpha, swapped=True)
    return ValidatedGame(xa, xb, va, vb, alpha, swapped=False)


def as_allocation(x: Sequence[float] | np.ndarray, budget: float, n: int | None = None) -> np.ndarray:
    """Check feasibility of an allocation (or a stack of them, one per row)."""
    a = np.asarray(x, dtype=float)
    if n is not None and a.shape[-1] != n:
        raise InfeasibleAllocation(f"allocation has {a.shape[-1]} entries, game has {n}")
    if not np.all(np.isfinite(a)):
        raise InfeasibleAllocation("allocation contains a non-finite entry")
    if np.any(a < 0):
        raise InfeasibleAllocation("allocation contains a negative entry")
    over = np.sum(a, axis=-1) - budget
    if np.any(over > BUDGET_TOL):
        raise InfeasibleAllocation(
            f"allocation exceeds budget {budget} by {float(np.max(over)):.3g}"
        )
    return a


def blotto_shares(x_a, x_b, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Winner-takes-all shares; exact ties split as (alpha, 1 - alpha)."""
    x_a = np.asarray(x_a, dtype=float)
    x_b = np.asarray(x_b, dtype=float)
    tie = x_a == x_b
    za = (x_a > x_b) + alpha * tie
    zb = (x_b > x_a) + (1.0 - alpha) * tie
    return za, zb


def _weighted(game: ValidatedGame, za, zb) -> tuple:
    pa = np.sum(za * game.values_a, axis=-1)
    pb = np.sum(zb * game.values_b, axis=-1)
    if np.ndim(pa) == 0:
        return float(pa), float(pb)
    return pa, pb


def blotto_payoff(game: ValidatedGame, x_a, x_b) -> tuple:
    """(Pi_A, Pi_B) under the winner-takes-all rule, in internal labels.

    Rows of 2-d inputs are treated as separate profiles.
    """
    x_a = as_allocation(x_a, game.budget_a, game.n)
    x_b = as_allocation(x_b, game.budget_b, game.n)
    return _weighted(game, *blotto_shares(x_a, x_b, game.alpha))


def csf_payoff(game: ValidatedGame, csf, x_a, x_b) -> tuple:
    """(Pi_A, Pi_B) when battlefields are decided by a contest success function."""
    x_a = as_allocation(x_a, game.budget_a, game.n)
    x_b = as_allocation(x_b, game.budget_b, game.n)
    return _weighted(game, *csf.evaluate(x_a, x_b))


# -- documents ---------------------------------------------------------------


def _key_line(text: str, key: str) -> int | None:
    pat = re.compile(rf'^\s*"?{re.escape(key)}"?\s*[:=]|"{re.escape(key)}"\s*:', re.M)
    m = pat.search(text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def spec_from_mapping(doc: Mapping[str, Any], text: str | None = None) -> GameSpec:
    """Build a GameSpec from a parsed document, naming the key that is wrong."""

    def fail(msg, key):
        line = _key_line(text, key) if text is not None else None
        raise GameFileError(msg, key, line)

    for key in GAME_KEYS:
        if key not in doc and key != "alpha":
            fail("missing required key", key)
    unknown = sorted(set(doc) - set(GAME_KEYS))
    if unknown:
        fail("unknown key", unknown[0])
    n = doc["n"]
    if isinstance(n, bool) or not isinstance(n, int):
        fail(f"expected an integer, got {n!r}", "n")
    out = {}
    for key in ("budget_a", "budget_b", "alpha"):
        v = doc.get(key, 0.5)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            fail(f"expected a number, got {v!r}", key)
        out[key] = float(v)
    for key in ("values_a", "values_b"):
        v = doc[key]
        if not isinstance(v, (list, tuple)) or not all(
            isinstance(t, (int, float)) and not isinstance(t, bool) for t in v
        ):
            fail("expected a list of numbers", key)
        out[key] = tuple(float(t) for t in v)
    spec = GameSpec(n, out["budget_a"], out["budget_b"], out["values_a"], out["values_b"], out["alpha"])
    try:
        validate_game(spec)
    except GameError as exc:
        msg = str(exc)
        order = ("values_a", "values_b", "budget_a", "budget_b", "alpha", "n")
        key = next((k for k in order if re.search(rf"\b{k}\b", msg)), None)
        if key == "n" and "length" in msg:
            key = "values_a" if len(spec.values_a) != spec.n else "values_b"
        fail(msg, key)
    return spec


def parse_game_text(text: str, fmt: str = "json") -> GameSpec:
    if fmt == "json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise GameFileError(f"malformed JSON: {exc.msg}", None, exc.lineno) from None
    elif fmt == "toml":
        try:
            doc = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            line = getattr(exc, "lineno", None)
            if line is None:
                m = re.search(r"line (\d+)", str(exc))
                line = int(m.group(1)) if m else None
            raise GameFileError(f"malformed TOML: {exc}", None, line) from None
    else:
        raise GameError(f"unknown game file format {fmt!r}")
    if not isinstance(doc, dict):
        raise GameFileError("game document must be an object", None, 1)
    if "game" in doc and isinstance(doc["game"], dict) and "n" not in doc:
        doc = doc["game"]
    return spec_from_mapping(doc, text)


def load_game(path: str | Path) -> GameSpec:
    """Read a game from a .json or .toml file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise GameError(f"cannot read game file {path}: {exc.strerror}") from None
    fmt = "toml" if path.suffix.lower() == ".toml" else "json"
    return parse_game_text(text, fmt)
