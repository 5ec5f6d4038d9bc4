"""Game generators, experiment configuration and parameter sweeps."""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Mapping, Optional

import numpy as np

from .best_response import DEFAULT_GRID, DEFAULT_SAMPLES, estimate_exploitability
from .csf import ContestSuccessFunction, delta_bound
from .game import GameError, GameSpec, load_game, spec_from_mapping, validate_game
from .gamma import solve_gamma
from .rng import RandomStream, derive_seed

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

FAMILIES = ("uniform_values", "two_tier", "random_bounded", "constant_sum_random")
TASKS = ("solve", "sample", "payoff", "exploit", "delta", "sweep")
AXES = ("n", "R", "eps", "budget_ratio")
SWEEP_COLUMNS = ("axis", "value", "seed", "eps_a", "eps_b", "ci_a", "ci_b", "delta", "ms")
DEFAULT_EPS = 0.05
U64 = (1 << 64) - 1


class ConfigError(ValueError):
    """Invalid experiment configuration."""


# -- generators --------------------------------------------------------------

_FAMILY_PARAMS = {
    "uniform_values": {"n", "budget_a", "budget_b", "alpha"},
    "two_tier": {"n", "budget_a", "budget_b", "alpha", "high", "low", "fraction"},
    "random_bounded": {"n", "budget_a", "budget_b", "alpha", "w_low", "w_high"},
    "constant_sum_random": {"n", "budget_a", "budget_b", "alpha", "w_low", "w_high"},
}


def generate_game(family: str, params: Mapping[str, Any] | None = None, seed: int = 0) -> GameSpec:
    """Deterministic game from a named family.

    Every family takes ``n``, ``budget_a`` (1.0), ``budget_b`` (1.0) and ``alpha`` (0.5).
    ``two_tier`` gives A value ``high`` on the first ``ceil(fraction n)`` battlefields
    and B value ``high`` on the last ones, ``low`` elsewhere. The random families
    draw values uniformly from ``[w_low, w_high]`` (defaults 1 and 3);
    ``constant_sum_random`` uses the same draw for both players.
    """
    params = dict(params or {})
    if family not in _FAMILY_PARAMS:
        raise ConfigError(f"unknown game family {family!r}; expected one of {FAMILIES}")
    unknown = sorted(set(params) - _FAMILY_PARAMS[family])
    if unknown:
        raise ConfigError(f"unknown parameter {unknown[0]!r} for family {family!r}")
    if "n" not in params:
        raise ConfigError(f"family {family!r} needs parameter 'n'")
    n = int(params["n"])
    xa = float(params.get("budget_a", 1.0))
    xb = float(params.get("budget_b", 1.0))
    alpha = float(params.get("alpha", 0.5))
    if family == "uniform_values":
        va = vb = np.ones(n)
    elif family == "two_tier":
        high, low = float(params.get("high", 2.0)), float(params.get("low", 1.0))
        k = math.ceil(float(params.get("fraction", 0.5)) * n)
        va = np.full(n, low)
        vb = np.full(n, low)
        va[:k] = high
        vb[n - k :] = high
    else:
        lo, hi = float(params.get("w_low", 1.0)), float(params.get("w_high", 3.0))
        if not (0 < lo <= hi):
            raise ConfigError(f"value bounds must satisfy 0 < w_low <= w_high, got {lo}, {hi}")
        rng = RandomStream(seed)
        va = lo + (hi - lo) * rng.uniform(n)
        vb = va if family == "constant_sum_random" else lo + (hi - lo) * rng.uniform(n)
    return GameSpec(n, xa, xb, tuple(map(float, va)), tuple(map(float, vb)), alpha)


# -- configuration -----------------------------------------------------------


@dataclass(frozen=True)
class GameSource:
    inline: Optional[GameSpec] = None
    path: Optional[str] = None
    family: Optional[str] = None
    params: Mapping[str, Any] = field(default_factory=dict)
    seed: Optional[int] = None

    def build(self, overrides: Mapping[str, Any] | None = None, seed: int = 0) -> GameSpec:
        overrides = dict(overrides or {})
        if self.family is not None:
            params = {**self.params, **overrides}
            return generate_game(self.family, params, self.seed if self.seed is not None else seed)
        spec = self.inline if self.inline is not None else load_game(self.path)
        if "n" in overrides:
            raise ConfigError("the n axis needs a generated game")
        if overrides:
            spec = replace(spec, **overrides)
        return spec


@dataclass(frozen=True)
class ExperimentConfig:
    game: GameSource
    task: str = "exploit"
    csf: Optional[ContestSuccessFunction] = None
    axis: Optional[str] = None
    values: tuple = ()
    m_samples: int = DEFAULT_SAMPLES
    grid_points: int = DEFAULT_GRID
    repetitions: int = 1
    seed: int = 0
    eps: float = DEFAULT_EPS
    gamma_index: int = 0
    output_path: Optional[str] = None
    output_format: str = "json"
    threads: int = 1
    timing: bool = False


def _csf_from(doc: Mapping[str, Any]) -> ContestSuccessFunction:
    kind = str(doc.get("kind", "blotto")).lower()
    unknown = sorted(set(doc) - {"kind", "R", "alpha"})
    if unknown:
        raise ConfigError(f"unknown csf key {unknown[0]!r}")
    if kind == "custom":
        raise ConfigError("custom CSFs are only available through the library API")
    try:
        return ContestSuccessFunction(kind, float(doc.get("alpha", 0.5)), doc.get("R"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _game_source(doc: Any, base: Path) -> GameSource:
    if isinstance(doc, str):
        doc = {"path": doc}
    if not isinstance(doc, Mapping):
        raise ConfigError("'game' must be a table")
    if "path" in doc:
        p = Path(doc["path"])
        p = p if p.is_absolute() else base / p
        if not p.exists():
            raise ConfigError(f"game file not found: {p}")
        return GameSource(path=str(p))
    if "family" in doc:
        unknown = sorted(set(doc) - {"family", "params", "seed"})
        if unknown:
            raise ConfigError(f"unknown game key {unknown[0]!r}")
        seed = doc.get("seed")
        if seed is not None:
            seed = _seed(seed)
        params = dict(doc.get("params", {}))
        generate_game(doc["family"], {"n": 3, **params}, seed or 0)  # fail early
        return GameSource(family=doc["family"], params=dict(doc.get("params", {})), seed=seed)
    try:
        return GameSource(inline=spec_from_mapping(doc))
    except GameError as exc:
        raise ConfigError(str(exc)) from None


def _seed(v: Any) -> int:
    if isinstance(v, bool) or not isinstance(v, int) or not (0 <= v <= U64):
        raise ConfigError(f"seeds must be unsigned 64-bit integers, got {v!r}")
    return int(v)


_TOP_KEYS = {
    "task", "game", "csf", "sweep", "m_samples", "grid_points", "repetitions", "seed",
    "eps", "gamma_index", "output", "threads", "timing",
}


def config_from_mapping(doc: Mapping[str, Any], base: Path | str = ".") -> ExperimentConfig:
    unknown = sorted(set(doc) - _TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown config key {unknown[0]!r}")
    if "game" not in doc:
        raise ConfigError("config needs a 'game' section")
    task = doc.get("task", "sweep" if "sweep" in doc else "exploit")
    if task not in TASKS:
        raise ConfigError(f"unknown task {task!r}; expected one of {TASKS}")
    kw: dict[str, Any] = {"game": _game_source(doc["game"], Path(base)), "task": task}
    if "csf" in doc:
        kw["csf"] = _csf_from(doc["csf"])
    if "sweep" in doc:
        sw = doc["sweep"]
        axis = sw.get("axis")
        if axis not in AXES:
            raise ConfigError(f"sweep axis must be one of {AXES}, got {axis!r}")
        values = tuple(sw.get("values", ()))
        if not values:
            raise ConfigError("sweep values must be a nonempty list")
        kw.update(axis=axis, values=values)
    src = kw["game"]
    if src.family is not None and "n" not in src.params and kw.get("axis") != "n":
        raise ConfigError(f"family {src.family!r} needs parameter 'n' unless the sweep axis is n")
    for key in ("m_samples", "grid_points", "repetitions", "gamma_index", "threads"):
        if key in doc:
            v = doc[key]
            if isinstance(v, bool) or not isinstance(v, int) or v < (0 if key == "gamma_index" else 1):
                raise ConfigError(f"{key} must be a positive integer, got {v!r}")
            kw[key] = v
    if kw.get("grid_points", 2) < 2:
        raise ConfigError("grid_points must be at least 2")
    if "seed" in doc:
        kw["seed"] = _seed(doc["seed"])
    if "eps" in doc:
        kw["eps"] = float(doc["eps"])
    if "timing" in doc:
        kw["timing"] = bool(doc["timing"])
    out = doc.get("output", {})
    if "path" in out:
        kw["output_path"] = str(out["path"])
    if "format" in out:
        if out["format"] not in ("json", "csv"):
            raise ConfigError("output format must be 'json' or 'csv'")
        kw["output_format"] = out["format"]
    return ExperimentConfig(**kw)


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    try:
        doc = tomllib.loads(text) if path.suffix.lower() == ".toml" else json.loads(text)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    return config_from_mapping(doc, path.parent)


# -- sweeps ------------------------------------------------------------------


@dataclass
class SweepRecord:
    index: int
    axis: str
    value: float
    repetition: int
    seed: int
    eps_a: Optional[float] = None
    eps_b: Optional[float] = None
    ci_a: Optional[float] = None
    ci_b: Optional[float] = None
    delta: Optional[float] = None
    ms: Optional[float] = None
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return asdict(self)

    def csv_row(self) -> list:
        d = self.to_dict()
        return ["" if d[c] is None else repr(d[c]) if isinstance(d[c], float) else d[c] for c in SWEEP_COLUMNS]


def _axis_value(axis: str, v: Any):
    return int(v) if axis == "n" else float(v)


def run_record(cfg: ExperimentConfig, index: int, axis_index: int, rep: int) -> SweepRecord:
    axis = cfg.axis or "n"
    value = cfg.values[axis_index] if cfg.values else float("nan")
    seed = derive_seed(cfg.seed, axis_index, rep)
    rec = SweepRecord(index, axis, value, rep, seed)
    start = time.perf_counter()
    try:
        overrides: dict[str, Any] = {}
        csf, eps = cfg.csf, cfg.eps
        v = _axis_value(axis, value) if cfg.values else None
        if cfg.values and axis == "n":
            overrides["n"] = v
        elif axis == "budget_ratio" and cfg.values:
            base = cfg.game.build(seed=seed)
            overrides["budget_b"] = base.budget_a * v
        elif axis == "R" and cfg.values:
            if csf is None or csf.kind not in ("power", "logit"):
                raise ConfigError("the R axis needs a power or logit csf")
            csf = replace(csf, R=v)
        elif axis == "eps" and cfg.values:
            eps = v
        game = validate_game(cfg.game.build(overrides, seed=seed))
        sols = solve_gamma(game)
        sol = sols[min(cfg.gamma_index, len(sols) - 1)]
        rule = csf.swapped() if (csf is not None and game.swapped) else csf
        ra, rb = estimate_exploitability(game, sol, rule, cfg.m_samples, cfg.grid_points, seed)
        if game.swapped:
            ra, rb = rb, ra
        rec.eps_a, rec.eps_b = ra.epsilon_hat, rb.epsilon_hat
        rec.ci_a = ra.ci_halfwidth / game.total(game.caller_player("A"))
        rec.ci_b = rb.ci_halfwidth / game.total(game.caller_player("B"))
        if rule is not None and rule.kind != "blotto":
            rec.delta = delta_bound(game, sol, rule, eps).delta
        elif rule is not None:
            rec.delta = 0.0
    except Exception as exc:  # one bad record must not sink the sweep
        rec.error = f"{type(exc).__name__}: {exc}"
    if cfg.timing:
        rec.ms = (time.perf_counter() - start) * 1000.0
    return rec


def _slope(xs, ys) -> Optional[float]:
    pts = [(math.log(x), math.log(y)) for x, y in zip(xs, ys) if x > 0 and y is not None and y > 0]
    if len(pts) < 2:
        return None
    lx = np.array([p[0] for p in pts])
    ly = np.array([p[1] for p in pts])
    return float(np.polyfit(lx, ly, 1)[0])


def summarize(records: list[SweepRecord]) -> dict:
    by_value: dict[Any, list[SweepRecord]] = {}
    for r in records:
        by_value.setdefault(r.value, []).append(r)
    rows = []
    for value, recs in by_value.items():
        ok = [r for r in recs if r.error is None]
        med = lambda key: statistics.median([getattr(r, key) for r in ok]) if ok and getattr(ok[0], key) is not None else None
        rows.append(
            {
                "value": value,
                "records": len(recs),
                "errors": len(recs) - len(ok),
                "median_eps_a": med("eps_a"),
                "median_eps_b": med("eps_b"),
                "median_eps": statistics.median([max(r.eps_a, r.eps_b) for r in ok]) if ok and ok[0].eps_a is not None else None,
                "median_delta": med("delta"),
            }
        )
    out: dict[str, Any] = {"axis": records[0].axis if records else None, "per_value": rows}
    if records and records[0].axis == "n":
        xs = [float(r["value"]) for r in rows]
        out["slope_eps_a"] = _slope(xs, [r["median_eps_a"] for r in rows])
        out["slope_eps_b"] = _slope(xs, [r["median_eps_b"] for r in rows])
        out["slope_eps"] = _slope(xs, [r["median_eps"] for r in rows])
    return out


def run_sweep(
    cfg: ExperimentConfig,
    partial_path: str | Path | None = None,
    progress: Callable[[SweepRecord], None] | None = None,
) -> list[SweepRecord]:
    """One record per (axis value, repetition), returned in canonical order.

    Completed records are appended to ``partial_path`` (JSON lines with their
    index) as they finish, so an interrupted run can be recovered.
    """
    values = cfg.values or (float("nan"),)
    jobs = [(k, a, r) for k, (a, r) in enumerate((a, r) for a in range(len(values)) for r in range(cfg.repetitions))]
    sink = open(partial_path, "w") if partial_path else None
    done: list[SweepRecord] = []

    def finish(rec: SweepRecord) -> None:
        done.append(rec)
        if sink is not None:
            sink.write(json.dumps(rec.to_dict()) + "\n")
            sink.flush()
        if progress is not None:
            progress(rec)

    try:
        if cfg.threads > 1:
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                futures = [pool.submit(run_record, cfg, *job) for job in jobs]
                for fut in futures:
                    finish(fut.result())
        else:
            for job in jobs:
                finish(run_record(cfg, *job))
    finally:
        if sink is not None:
            sink.close()
    return sorted(done, key=lambda r: r.index)


def format_sweep(records: list[SweepRecord], fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in records:
            w.writerow(r.csv_row())
        return buf.getvalue()
    return json.dumps({"records": [r.to_dict() for r in records], "summary": summarize(records)}, indent=2) + "\n"
