"""Command-line front end.

Exit codes: 0 on success, 2 for configuration or input errors, 3 for numerical failures.
All results are reported in the caller's player labels.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from .best_response import DEFAULT_GRID, DEFAULT_SAMPLES, estimate_exploitability
from .csf import ContestSuccessFunction, CSFError, delta_bound
from .distributions import uniform_type_marginals
from .experiments import (
    DEFAULT_EPS,
    ConfigError,
    ExperimentConfig,
    format_sweep,
    load_config,
    run_sweep,
)
from .game import GameError, InfeasibleAllocation, csf_payoff, load_game, validate_game
from .gamma import NumericalError, solve_gamma
from .iu import IUSampler, sample_batch
from .rng import RandomStream

U64 = (1 << 64) - 1


class Ctx:
    def __init__(self, config, seed, out, fmt, threads):
        self.config: ExperimentConfig | None = config
        self.seed = seed
        self.out = out
        self.fmt = fmt
        self.threads = threads

    def setting(self, name, cli_value, default):
        if cli_value is not None:
            return cli_value
        if self.config is not None:
            return getattr(self.config, name)
        return default

    def game(self, path):
        if path is not None:
            spec = load_game(path)
        elif self.config is not None:
            spec = self.config.game.build(seed=self.seed_value())
        else:
            raise ConfigError("no game given: pass --game or --config")
        return validate_game(spec)

    def seed_value(self) -> int:
        return self.setting("seed", self.seed, 0)

    def threads_value(self) -> int:
        return self.setting("threads", self.threads, 1)

    def format(self, default: str) -> str:
        if self.fmt is not None:
            return self.fmt
        if self.config is not None and self.config.output_path is not None:
            return self.config.output_format
        return default

    def emit(self, text: str) -> None:
        path = self.out or (self.config.output_path if self.config is not None else None)
        if path is None:
            click.echo(text, nl=False)
        else:
            Path(path).write_text(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _solution_for_caller(game, sol) -> dict:
    d = sol.to_dict()
    if game.swapped:
        strong = set(sol.omega_a)
        d = {
            "gamma": 1.0 / sol.gamma,
            "lambda_a": sol.lambda_b,
            "lambda_b": sol.lambda_a,
            "omega_a": [i for i in range(game.n) if i not in strong],
            "residual": sol.residual,
        }
    d["swapped"] = game.swapped
    return d


def _pick(game, index: int):
    sols = solve_gamma(game)
    if not 0 <= index < len(sols):
        raise ConfigError(f"gamma index {index} out of range; {len(sols)} solution(s)")
    return sols[index]


def _csf(ctx: Ctx, kind, R, alpha, game=None):
    if kind is None:
        if ctx.config is not None and ctx.config.csf is not None:
            csf = ctx.config.csf
        else:
            csf = ContestSuccessFunction.blotto(game.to_spec().alpha if game is not None else 0.5)
    else:
        default_alpha = game.to_spec().alpha if (game is not None and kind == "blotto") else 0.5
        csf = ContestSuccessFunction(kind, default_alpha if alpha is None else alpha, R)
    return csf


def _internal(game, csf):
    return csf.swapped() if game.swapped else csf


def _vector(text: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in text.split(",")])
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {text!r}") from None


game_option = click.option("--game", "game_path", type=click.Path(dir_okay=False), help="Game file (.json or .toml).")
gamma_option = click.option("--gamma-index", type=int, default=None, help="Which root to use, ascending (default 0, the smallest).")
csf_options = [
    click.option("--csf", "kind", type=click.Choice(["blotto", "power", "logit"]), default=None, help="Contest rule."),
    click.option("--R", "R", type=float, default=None, help="CSF sharpness."),
    click.option("--alpha", type=float, default=None, help="CSF tie share of player A."),
]


def with_csf(f):
    for opt in reversed(csf_options):
        f = opt(f)
    return f


@click.group()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None, help="Experiment config (.toml or .json).")
@click.option("--seed", type=click.IntRange(0, U64), default=None, help="Root seed (unsigned 64-bit).")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write output here instead of stdout.")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default=None, help="Output format.")
@click.option("--threads", type=click.IntRange(1), default=None, help="Worker threads.")
@click.pass_context
def cli(ctx, config_path, seed, out, fmt, threads):
    """Equilibrium solver and diagnostics for generalized Blotto games."""
    config = load_config(config_path) if config_path else None
    ctx.obj = Ctx(config, seed, out, fmt, threads)


@cli.command()
@game_option
@click.pass_obj
def solve(ctx: Ctx, game_path):
    """Print every positive root with its multipliers."""
    game = ctx.game(game_path)
    rows = [_solution_for_caller(game, s) for s in solve_gamma(game)]
    if ctx.format("json") == "csv":
        keys = ("gamma", "lambda_a", "lambda_b", "omega_a", "residual")
        body = [[r[k] if k != "omega_a" else " ".join(map(str, r[k])) for k in keys] for r in rows]
        ctx.emit(_csv(keys, body))
    else:
        ctx.emit(_json(rows))


@cli.command()
@game_option
@gamma_option
@click.pass_obj
def inspect(ctx: Ctx, game_path, gamma_index):
    """Print the equilibrium marginals of both players."""
    game = ctx.game(game_path)
    sol = _pick(game, ctx.setting("gamma_index", gamma_index, 0))
    ms = uniform_type_marginals(game, sol).to_dict()
    out = {
        "solution": _solution_for_caller(game, sol),
        "A": ms[game.caller_player("A")],
        "B": ms[game.caller_player("B")],
    }
    if game.swapped:
        for side in ("A", "B"):
            for d in out[side]:
                d["role"] = d["role"].replace("A", "#").replace("B", "A").replace("#", "B")
    ctx.emit(_json(out))


@cli.command()
@game_option
@gamma_option
@click.option("--player", type=click.Choice(["A", "B"]), default="A")
@click.option("-m", "--count", type=click.IntRange(1), default=None, help="Number of draws.")
@click.pass_obj
def sample(ctx: Ctx, game_path, gamma_index, player, count):
    """Draw IU allocations, one row per draw."""
    game = ctx.game(game_path)
    sol = _pick(game, ctx.setting("gamma_index", gamma_index, 0))
    m = count if count is not None else (ctx.config.m_samples if ctx.config else 1000)
    internal = game.caller_player(player)
    _, rows = sample_batch(IUSampler(game, sol), internal, m, RandomStream(ctx.seed_value()), ctx.threads_value())
    header = [f"b{i + 1}" for i in range(game.n)]
    if ctx.format("csv") == "json":
        ctx.emit(_json({"player": player, "allocations": rows.tolist()}))
    else:
        ctx.emit(_csv(header, rows.tolist()))


@cli.command()
@game_option
@with_csf
@click.option("--xa", required=True, help="A's allocation, comma separated.")
@click.option("--xb", required=True, help="B's allocation, comma separated.")
@click.pass_obj
def payoff(ctx: Ctx, game_path, kind, R, alpha, xa, xb):
    """Payoffs of a pure-strategy profile."""
    game = ctx.game(game_path)
    csf = _internal(game, _csf(ctx, kind, R, alpha, game))
    a, b = _vector(xa), _vector(xb)
    if game.swapped:
        a, b = b, a
    pa, pb = csf_payoff(game, csf, a, b)
    if game.swapped:
        pa, pb = pb, pa
    if ctx.format("json") == "csv":
        ctx.emit(_csv(["pi_a", "pi_b"], [[pa, pb]]))
    else:
        ctx.emit(_json({"pi_a": pa, "pi_b": pb}))


@cli.command()
@game_option
@gamma_option
@with_csf
@click.option("-m", "--samples", type=click.IntRange(1), default=None, help=f"Monte Carlo draws (default {DEFAULT_SAMPLES}).")
@click.option("--grid", type=click.IntRange(2), default=None, help=f"Best-response grid points (default {DEFAULT_GRID}).")
@click.pass_obj
def exploit(ctx: Ctx, game_path, gamma_index, kind, R, alpha, samples, grid):
    """Estimate how exploitable the IU profile is for each player."""
    game = ctx.game(game_path)
    sol = _pick(game, ctx.setting("gamma_index", gamma_index, 0))
    csf = _internal(game, _csf(ctx, kind, R, alpha, game))
    m = ctx.setting("m_samples", samples, DEFAULT_SAMPLES)
    g = ctx.setting("grid_points", grid, DEFAULT_GRID)
    ra, rb = estimate_exploitability(game, sol, csf, m, g, ctx.seed_value(), ctx.threads_value())
    reports = []
    for r in (ra, rb):
        d = r.to_dict()
        d["player"] = game.caller_player(r.player)
        reports.append(d)
    reports.sort(key=lambda d: d["player"])
    if ctx.format("json") == "csv":
        keys = list(reports[0])
        ctx.emit(_csv(keys, [[d[k] for k in keys] for d in reports]))
    else:
        ctx.emit(_json({d["player"]: d for d in reports}))


@cli.command()
@game_option
@gamma_option
@with_csf
@click.option("--eps", type=float, default=None, help=f"Dissimilarity threshold (default {DEFAULT_EPS}).")
@click.pass_obj
def delta(ctx: Ctx, game_path, gamma_index, kind, R, alpha, eps):
    """Numerical delta bound for a contest success function."""
    game = ctx.game(game_path)
    sol = _pick(game, ctx.setting("gamma_index", gamma_index, 0))
    csf = _internal(game, _csf(ctx, kind, R, alpha, game))
    res = delta_bound(game, sol, csf, ctx.setting("eps", eps, DEFAULT_EPS)).to_dict()
    res["argmax_player"] = game.caller_player(res["argmax_player"])
    if ctx.format("json") == "csv":
        ctx.emit(_csv(list(res), [list(res.values())]))
    else:
        ctx.emit(_json(res))


@cli.command()
@click.option("--timing/--no-timing", default=None, help="Fill the ms column with wall-clock time (breaks byte-identical reruns).")
@click.pass_obj
def sweep(ctx: Ctx, timing):
    """Run the sweep described by --config."""
    if ctx.config is None:
        raise ConfigError("sweep needs --config")
    cfg = ctx.config
    cfg = replace(
        cfg,
        seed=ctx.seed_value(),
        threads=ctx.threads_value(),
        timing=cfg.timing if timing is None else timing,
    )
    fmt = ctx.format("json")
    path = ctx.out or cfg.output_path
    partial = f"{path}.partial" if path else None
    records = run_sweep(cfg, partial)
    ctx.emit(format_sweep(records, fmt))
    if partial:
        Path(partial).unlink(missing_ok=True)
    failed = [r for r in records if r.error]
    for r in failed:
        click.echo(f"record {r.index} failed: {r.error}", err=True)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="iublotto", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return 2
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except (ConfigError, GameError, CSFError, InfeasibleAllocation) as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except (NumericalError, FloatingPointError, ZeroDivisionError) as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        return 3
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
