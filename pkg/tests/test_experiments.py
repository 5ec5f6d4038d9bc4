import csv
import io
import json
import warnings
from dataclasses import replace

import pytest

from iublotto.best_response import estimate_exploitability
from iublotto.experiments import (
    SWEEP_COLUMNS,
    ConfigError,
    config_from_mapping,
    format_sweep,
    generate_game,
    load_config,
    run_sweep,
    summarize,
)
from iublotto.game import validate_game
from iublotto.gamma import solve_gamma
from iublotto.rng import derive_seed


def test_uniform_values_family():
    spec = generate_game("uniform_values", {"n": 10, "budget_a": 1, "budget_b": 2})
    assert spec.values_a == spec.values_b == (1.0,) * 10
    assert (spec.budget_a, spec.budget_b) == (1.0, 2.0)


def test_random_bounded_is_deterministic_and_bounded():
    a = generate_game("random_bounded", {"n": 6, "w_low": 1, "w_high": 3}, seed=7)
    b = generate_game("random_bounded", {"n": 6, "w_low": 1, "w_high": 3}, seed=7)
    assert a == b
    assert all(1 <= v <= 3 for v in a.values_a + a.values_b)
    assert a != generate_game("random_bounded", {"n": 6, "w_low": 1, "w_high": 3}, seed=8)


def test_constant_sum_family_has_single_root():
    spec = generate_game("constant_sum_random", {"n": 20, "budget_b": 1.7}, seed=1)
    assert spec.values_a == spec.values_b
    (sol,) = solve_gamma(validate_game(spec))
    assert sol.gamma == pytest.approx(1.7, rel=1e-14)


def test_two_tier_family():
    spec = generate_game("two_tier", {"n": 5, "high": 4, "low": 1, "fraction": 0.4})
    assert spec.values_a == (4.0, 4.0, 1.0, 1.0, 1.0)
    assert spec.values_b == (1.0, 1.0, 1.0, 4.0, 4.0)


@pytest.mark.parametrize(
    "family, params",
    [
        ("zipf", {"n": 3}),
        ("random_bounded", {"n": 3, "w_low": 3, "w_high": 1}),
        ("random_bounded", {"n": 3, "w_low": 0, "w_high": 1}),
        ("uniform_values", {"n": 3, "colour": 1}),
        ("uniform_values", {}),
    ],
)
def test_generator_errors(family, params):
    with pytest.raises(ConfigError):
        generate_game(family, params)


def base_config(**extra):
    doc = {
        "game": {"family": "uniform_values", "params": {"budget_b": 1.5}},
        "sweep": {"axis": "n", "values": [4, 8]},
        "m_samples": 2000,
        "grid_points": 41,
        "repetitions": 2,
        "seed": 11,
    }
    doc.update(extra)
    return config_from_mapping(doc)


def test_sweep_records_are_canonical_and_deterministic():
    cfg = base_config()
    one = run_sweep(cfg)
    again = run_sweep(cfg)
    many = run_sweep(replace(cfg, threads=4))
    assert [r.to_dict() for r in one] == [r.to_dict() for r in again] == [r.to_dict() for r in many]
    assert [(r.value, r.repetition) for r in one] == [(4, 0), (4, 1), (8, 0), (8, 1)]
    assert [r.seed for r in one] == [derive_seed(11, a, k) for a in range(2) for k in range(2)]
    assert all(r.ms is None and r.error is None for r in one)


def test_single_point_sweep_equals_single_exploit_run():
    cfg = base_config(sweep={"axis": "n", "values": [6]}, repetitions=1)
    (rec,) = run_sweep(cfg)
    game = validate_game(generate_game("uniform_values", {"n": 6, "budget_b": 1.5}))
    ra, rb = estimate_exploitability(game, solve_gamma(game)[0], None, 2000, 41, rec.seed)
    assert (rec.eps_a, rec.eps_b) == (ra.epsilon_hat, rb.epsilon_hat)
    assert rec.ci_a == ra.ci_halfwidth / game.total_a


def test_bad_record_does_not_sink_the_sweep():
    cfg = base_config(sweep={"axis": "n", "values": [1, 4]}, repetitions=1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        recs = run_sweep(cfg)
    assert recs[0].error is not None and "GameError" in recs[0].error
    assert recs[1].error is None
    summary = summarize(recs)
    assert summary["per_value"][0]["errors"] == 1


def test_partial_file_written_incrementally(tmp_path):
    seen = []
    part = tmp_path / "run.partial"

    def progress(rec):
        seen.append(len(part.read_text().splitlines()))

    run_sweep(base_config(), part, progress)
    assert seen == [1, 2, 3, 4]
    lines = [json.loads(x) for x in part.read_text().splitlines()]
    assert sorted(d["index"] for d in lines) == [0, 1, 2, 3]


def test_csv_schema():
    recs = run_sweep(base_config())
    rows = list(csv.reader(io.StringIO(format_sweep(recs, "csv"))))
    assert tuple(rows[0]) == SWEEP_COLUMNS
    assert len(rows) == 5 and all(len(r) == 9 for r in rows)
    assert float(rows[1][3]) == recs[0].eps_a


def test_json_output_has_summary_with_slope():
    recs = run_sweep(base_config())
    doc = json.loads(format_sweep(recs, "json"))
    assert len(doc["records"]) == 4
    assert doc["summary"]["axis"] == "n"
    assert set(doc["summary"]) >= {"slope_eps_a", "slope_eps_b", "slope_eps"}


def test_r_axis_and_delta():
    cfg = config_from_mapping(
        {
            "game": {"family": "random_bounded", "params": {"n": 5, "budget_b": 1.3}, "seed": 2},
            "csf": {"kind": "logit", "R": 10, "alpha": 0.5},
            "sweep": {"axis": "R", "values": [10, 1000]},
            "m_samples": 500,
            "grid_points": 21,
            "eps": 0.1,
        }
    )
    recs = run_sweep(cfg)
    assert all(r.error is None for r in recs)
    assert recs[1].delta <= recs[0].delta


def test_budget_ratio_axis():
    cfg = base_config(
        game={"family": "uniform_values", "params": {"n": 4}},
        sweep={"axis": "budget_ratio", "values": [1.0, 2.0]},
        repetitions=1,
    )
    recs = run_sweep(cfg)
    assert all(r.error is None for r in recs)


def test_eps_axis_moves_delta():
    cfg = base_config(
        game={"family": "uniform_values", "params": {"n": 4}},
        csf={"kind": "power", "R": 50},
        sweep={"axis": "eps", "values": [0.05, 0.2]},
        repetitions=1,
    )
    recs = run_sweep(cfg)
    assert all(r.error is None for r in recs)
    assert recs[0].seed != recs[1].seed  # every axis value draws its own stream
    assert recs[1].delta <= recs[0].delta


@pytest.mark.parametrize(
    "doc",
    [
        {},
        {"game": {"family": "uniform_values", "params": {"n": 3}}, "task": "dance"},
        {"game": {"family": "uniform_values", "params": {"n": 3}}, "sweep": {"axis": "w", "values": [1]}},
        {"game": {"family": "uniform_values", "params": {"n": 3}}, "sweep": {"axis": "n", "values": []}},
        {"game": {"family": "uniform_values", "params": {"n": 3}}, "seed": -1},
        {"game": {"family": "uniform_values", "params": {"n": 3}}, "seed": 2**64},
        {"game": {"family": "uniform_values", "params": {"n": 3}}, "m_samples": 0},
        {"game": {"family": "uniform_values", "params": {"n": 3}}, "grid_points": 1},
        {"game": {"family": "uniform_values", "params": {"n": 3}}, "csf": {"kind": "custom"}},
        {"game": {"family": "uniform_values", "params": {"n": 3}}, "csf": {"kind": "logit", "alpha": 1.0, "R": 2}},
        {"game": {"family": "uniform_values"}},
        {"game": {"path": "missing.json"}},
        {"game": {"family": "uniform_values", "params": {"n": 3}}, "colour": "red"},
        {"game": {"family": "uniform_values", "params": {"n": 3}}, "output": {"format": "xml"}},
    ],
)
def test_config_errors(doc):
    with pytest.raises(ConfigError):
        config_from_mapping(doc)


def test_load_config_toml_with_relative_game(tmp_path):
    (tmp_path / "g.json").write_text(json.dumps({"n": 3, "budget_a": 1, "budget_b": 2, "values_a": [1, 1, 1], "values_b": [1, 2, 3]}))
    (tmp_path / "c.toml").write_text('task = "exploit"\nseed = 5\n[game]\npath = "g.json"\n[output]\nformat = "csv"\n')
    cfg = load_config(tmp_path / "c.toml")
    assert cfg.seed == 5 and cfg.output_format == "csv"
    assert cfg.game.build().values_b == (1.0, 2.0, 3.0)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.toml")
    (tmp_path / "bad.toml").write_text("task = \n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.toml")


def test_inline_game_rejects_n_axis():
    cfg = config_from_mapping(
        {
            "game": {"n": 3, "budget_a": 1, "budget_b": 2, "values_a": [1, 1, 1], "values_b": [1, 1, 1]},
            "sweep": {"axis": "n", "values": [4]},
            "m_samples": 100,
            "grid_points": 11,
        }
    )
    (rec,) = run_sweep(cfg)
    assert "ConfigError" in rec.error


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="measured decay is steeper than the band; see the ledger")
def test_n_sweep_slope_in_band():
    cfg = config_from_mapping(
        {
            "game": {"family": "constant_sum_random", "params": {"budget_b": 1.5}},
            "sweep": {"axis": "n", "values": [10, 20, 40, 80]},
            "repetitions": 10,
            "seed": 3,
        }
    )
    slope = summarize(run_sweep(cfg))["slope_eps"]
    assert -0.75 <= slope <= -0.25, slope


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="a very smooth rule (R=10) flattens the game and lowers the estimate; see the ledger")
def test_logit_r_sweep_non_increasing():
    cfg = config_from_mapping(
        {
            "game": {"family": "uniform_values", "params": {"n": 20, "budget_b": 1.5}},
            "csf": {"kind": "logit", "R": 10, "alpha": 0.5},
            "sweep": {"axis": "R", "values": [10, 100, 1000]},
            "repetitions": 10,
            "m_samples": 10_000,
            "grid_points": 101,
        }
    )
    rows = summarize(run_sweep(cfg))["per_value"]
    meds = [r["median_eps"] for r in rows]
    assert all(b <= a for a, b in zip(meds, meds[1:])), meds
