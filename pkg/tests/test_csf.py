import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iublotto.csf import (
    ContestSuccessFunction,
    CSFError,
    closed_form_delta,
    delta_bound,
    dissimilarity_set,
)
from iublotto.distributions import uniform_type_marginals
from iublotto.game import GameSpec, blotto_shares, validate_game
from iublotto.gamma import solve_gamma

from oracles import uniform_type_mass_by_scan

KINDS = [
    ContestSuccessFunction.blotto(0.35),
    ContestSuccessFunction.power(3.0, 0.35),
    ContestSuccessFunction.logit(4.0, 0.35),
]


def solved(xa, xb, wa, wb):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        g = validate_game(GameSpec(len(wa), xa, xb, tuple(wa), tuple(wb), 0.5))
    return g, solve_gamma(g)[0]


def gap_to_blotto(rule, x, y):
    za, _ = rule.evaluate(x, y)
    ba, _ = blotto_shares(np.asarray(x, float), np.asarray(y, float), rule.alpha)
    return np.abs(za - ba)


# -- evaluation ----------------------------------------------------------------


def test_tullock_example():
    assert ContestSuccessFunction.power(1.0, 0.5).evaluate(3.0, 1.0) == (0.75, 0.25)


@pytest.mark.parametrize("R", [0.1, 1.0, 50.0, 1e4])
@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.9])
def test_logit_tie_is_exact_split(R, alpha):
    for x in (0.0, 0.3, 7.0):
        assert ContestSuccessFunction.logit(R, alpha).evaluate(x, x) == (alpha, 1.0 - alpha)
        assert ContestSuccessFunction.power(R, alpha).evaluate(x, x) == (alpha, 1.0 - alpha)


def test_steep_power_is_nearly_blotto():
    za, zb = ContestSuccessFunction.power(1e6, 0.5).evaluate(1.01, 1.0)
    ba, bb = ContestSuccessFunction.blotto(0.5).evaluate(1.01, 1.0)
    assert abs(za - ba) < 1e-6 and abs(zb - bb) < 1e-6


def test_extreme_inputs_stay_finite():
    lg = ContestSuccessFunction.logit(1e5, 0.5)
    assert lg.evaluate(0.0, 1.0) == (0.0, 1.0)
    assert lg.evaluate(1.0, 0.0) == (1.0, 0.0)
    pw = ContestSuccessFunction.power(500.0, 0.5)
    assert pw.evaluate(0.0, 1.0) == (0.0, 1.0)
    assert pw.evaluate(1e-300, 1e300) == (0.0, 1.0)
    assert pw.evaluate(1e300, 1e-300) == (1.0, 0.0)


@pytest.mark.parametrize("kind", ["power", "logit"])
@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1])
def test_trivial_alpha_rejected(kind, alpha):
    with pytest.raises(CSFError):
        getattr(ContestSuccessFunction, kind)(2.0, alpha)


def test_bad_parameters():
    with pytest.raises(CSFError):
        ContestSuccessFunction.power(0.0, 0.5)
    with pytest.raises(CSFError):
        ContestSuccessFunction("lottery", 0.5)
    with pytest.raises(CSFError):
        ContestSuccessFunction.custom(None)
    bad = ContestSuccessFunction.custom(lambda x, y: x + 5.0)
    with pytest.raises(CSFError):
        bad.evaluate(1.0, 1.0)


def test_swapped_relabels_players():
    rule = ContestSuccessFunction.logit(3.0, 0.3)
    za, zb = rule.evaluate(0.4, 0.9)
    sa, sb = rule.swapped().evaluate(0.9, 0.4)
    assert sa == pytest.approx(zb, abs=1e-15) and sb == pytest.approx(za, abs=1e-15)
    custom = ContestSuccessFunction.custom(lambda x, y: 0.3 * np.exp(3 * x) / (0.3 * np.exp(3 * x) + 0.7 * np.exp(3 * y)), 0.3)
    assert custom.swapped().evaluate(0.9, 0.4)[0] == pytest.approx(zb, abs=1e-12)
    assert custom.swapped().alpha == pytest.approx(0.7)


# -- axioms --------------------------------------------------------------------


@pytest.mark.parametrize("rule", KINDS, ids=lambda r: r.kind)
def test_shares_sum_to_one(rule):
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 3, 10_000)
    y = rng.uniform(0, 3, 10_000)
    y[:1000] = x[:1000]  # ties
    x[1000:1500] = 0.0
    za, zb = rule.evaluate(x, y)
    assert np.all(np.abs(za + zb - 1.0) <= 1e-12)
    assert np.all(za >= 0) and np.all(zb >= 0)


@pytest.mark.parametrize("rule", KINDS, ids=lambda r: r.kind)
def test_shares_monotone(rule):
    rng = np.random.default_rng(1)
    for _ in range(100):
        xs = np.sort(rng.uniform(0, 3, 100))
        y = rng.uniform(0, 3)
        za, zb = rule.evaluate(xs, y)
        assert np.all(np.diff(za) >= 0) and np.all(np.diff(zb) <= 0)
        za, zb = rule.evaluate(y, xs)
        assert np.all(np.diff(za) <= 0) and np.all(np.diff(zb) >= 0)


@settings(max_examples=300, deadline=None)
@given(
    st.sampled_from(["power", "logit"]),
    st.floats(0.1, 200.0),
    st.floats(0.01, 0.99),
    st.floats(0.0, 10.0),
    st.floats(0.0, 10.0),
    st.floats(0.0, 1.0),
)
def test_axioms_property(kind, R, alpha, x, y, bump):
    rule = getattr(ContestSuccessFunction, kind)(R, alpha)
    za, zb = rule.evaluate(x, y)
    assert abs(za + zb - 1.0) <= 1e-12
    za2, zb2 = rule.evaluate(x + bump, y)
    assert za2 >= za and zb2 <= zb


@pytest.mark.parametrize("kind", ["power", "logit"])
@pytest.mark.parametrize("x, y", [(1.2, 1.0), (0.8, 1.0), (0.05, 0.3), (2.0, 0.5)])
def test_pointwise_convergence_to_blotto(kind, x, y):
    gaps = [float(gap_to_blotto(getattr(ContestSuccessFunction, kind)(R, 0.5), x, y)) for R in (1, 10, 100, 1000)]
    assert all(b < a or b == 0.0 for a, b in zip(gaps, gaps[1:])), gaps
    assert gaps[-1] < gaps[0]


# -- dissimilarity sets ----------------------------------------------------------


def scan_set(rule, c, eps, bound, points=200_001):
    x = np.linspace(0.0, bound, points)
    return x, gap_to_blotto(rule, x, c) >= eps


def test_power_at_zero_is_empty():
    s = dissimilarity_set(ContestSuccessFunction.power(5.0, 0.5), 0.0, 0.1, 4.0)
    assert s.empty
    x, inside = scan_set(ContestSuccessFunction.power(5.0, 0.5), 0.0, 0.1, 4.0)
    assert not inside.any()


def test_blotto_set_is_empty():
    rule = ContestSuccessFunction.blotto(0.5)
    for c in (0.0, 0.5, 4.0):
        assert dissimilarity_set(rule, c, 0.1, 4.0).empty


def test_logit_half_widths_example():
    s = dissimilarity_set(ContestSuccessFunction.logit(10.0, 0.5), 1.0, 0.1, 4.0)
    hw = math.log(9.0) / 10.0
    assert hw == pytest.approx(0.2197, abs=1e-4)
    assert s.lower_interval.lo == pytest.approx(1.0 - hw, rel=1e-14)
    assert s.upper_interval.hi == pytest.approx(1.0 + hw, rel=1e-14)
    assert s.singleton is None
    assert not s.contains(1.0)


@pytest.mark.parametrize(
    "rule",
    [
        ContestSuccessFunction.logit(10.0, 0.5),
        ContestSuccessFunction.logit(25.0, 0.3),
        ContestSuccessFunction.power(4.0, 0.5),
        ContestSuccessFunction.power(12.0, 0.7),
    ],
    ids=lambda r: f"{r.kind}-{r.R}",
)
@pytest.mark.parametrize("c", [0.0, 0.05, 1.0, 3.9])
def test_sets_match_dense_scan(rule, c):
    eps, bound = 0.1, 4.0
    s = dissimilarity_set(rule, c, eps, bound)
    x, inside = scan_set(rule, c, eps, bound)
    got = s.contains(x)
    mismatch = np.flatnonzero(got != inside)
    step = x[1] - x[0]
    # disagreement only within a grid step of a threshold crossing
    edges = [v for iv in (s.lower_interval, s.upper_interval) if iv is not None for v in (iv.lo, iv.hi)]
    for k in mismatch:
        assert min(abs(x[k] - e) for e in edges) <= step


def test_custom_matches_builtin_logit():
    R, a = 10.0, 0.4
    custom = ContestSuccessFunction.custom(lambda x, y: a / (a + (1 - a) * np.exp(R * (y - x))), a, lipschitz=True)
    builtin = ContestSuccessFunction.logit(R, a)
    for c in (0.0, 0.1, 1.0, 3.95):
        cs = dissimilarity_set(custom, c, 0.15, 4.0)
        bs = dissimilarity_set(builtin, c, 0.15, 4.0)
        for ci, bi in ((cs.lower_interval, bs.lower_interval), (cs.upper_interval, bs.upper_interval)):
            assert (ci is None) == (bi is None)
            if ci is not None:
                assert ci.lo == pytest.approx(bi.lo, abs=1e-9) and ci.hi == pytest.approx(bi.hi, abs=1e-9)


def test_custom_with_biased_tie_has_singleton():
    # ties always go to B: at the tie point the rule differs from alpha = 0.5 by 0.5
    rule = ContestSuccessFunction.custom(lambda x, y: np.where(x > y, 1.0, 0.0), 0.5)
    s = dissimilarity_set(rule, 1.0, 0.2, 4.0)
    assert s.singleton == 1.0 and s.lower_interval is None and s.upper_interval is None


def test_eps_out_of_range():
    for eps in (0.0, 0.3, -0.1):
        with pytest.raises(CSFError):
            dissimilarity_set(ContestSuccessFunction.logit(10.0, 0.3), 1.0, eps, 4.0)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(["power", "logit"]), st.floats(1.0, 1e4), st.floats(0.05, 0.95), st.floats(0.0, 1.0), st.floats(0.0, 4.0))
def test_sets_stay_in_range_and_exclude_center(kind, R, alpha, frac, c):
    rule = getattr(ContestSuccessFunction, kind)(R, alpha)
    eps = 0.01 + frac * (0.98 * min(alpha, 1 - alpha) - 0.01)
    s = dissimilarity_set(rule, c, eps, 4.0)
    assert not s.contains(c)
    for iv in (s.lower_interval, s.upper_interval):
        if iv is not None:
            assert 0.0 <= iv.lo <= iv.hi <= 4.0


# -- delta ------------------------------------------------------------------------


def test_delta_zero_for_blotto():
    g, s = solved(1.0, 1.5, [3, 1, 2], [1, 2, 2])
    d = delta_bound(g, s, ContestSuccessFunction.blotto(0.5), 0.1)
    assert d.delta == 0.0 and d.method == "NumericMax"


def test_delta_non_increasing_in_r():
    g, s = solved(1.0, 1.5, [3, 1, 2, 1, 1], [1, 2, 2, 1, 3])
    ds = [delta_bound(g, s, ContestSuccessFunction.power(R, 0.5), 0.1).delta for R in (10, 1e2, 1e3, 1e4)]
    assert all(b <= a for a, b in zip(ds, ds[1:])), ds
    ds = [delta_bound(g, s, ContestSuccessFunction.logit(R, 0.5), 0.1).delta for R in (10, 1e2, 1e3, 1e4)]
    assert all(b <= a for a, b in zip(ds, ds[1:])), ds


def test_numeric_delta_below_closed_form_for_power():
    rng = np.random.default_rng(31)
    for _ in range(100):
        n = int(rng.integers(3, 30))
        g, s = solved(1.0, float(rng.uniform(1, 5)), rng.uniform(1, 10, n), rng.uniform(1, 10, n))
        a = float(rng.uniform(0.2, 0.8))
        eps = float(rng.uniform(0.01, 0.99 * min(a, 1 - a)))
        rule = ContestSuccessFunction.power(10 ** rng.uniform(1, 6), a)
        d = delta_bound(g, s, rule, eps)
        assert d.closed_form_method == "ClosedFormPower"
        assert d.delta <= d.closed_form


def test_logit_closed_form_misses_the_atom_at_zero():
    g, s = solved(1.0, 2.0, [1] * 4, [1] * 4)  # A's marginals put 1/2 at zero
    rule = ContestSuccessFunction.logit(1e6, 0.5)
    d = delta_bound(g, s, rule, 0.1)
    assert d.closed_form < 1e-4
    assert d.delta >= 0.5
    # the atom is genuinely inside the set at a tiny positive center
    c = d.argmax_y
    assert dissimilarity_set(rule, c, 0.1, 4.0).contains(0.0)


@pytest.mark.parametrize(
    "rule",
    [ContestSuccessFunction.power(50.0, 0.5), ContestSuccessFunction.logit(200.0, 0.4), ContestSuccessFunction.power(8.0, 0.6)],
    ids=lambda r: f"{r.kind}-{r.R}",
)
def test_delta_verified_by_dense_rescan(rule):
    g, s = solved(1.0, 1.8, [4, 1, 2, 1, 1, 3], [1, 2, 2, 1, 3, 1])
    eps = 0.1
    d = delta_bound(g, s, rule, eps)
    ms = uniform_type_marginals(g, s)
    side = rule if d.argmax_player == "A" else rule.swapped()
    p0 = float(ms.zero_mass(d.argmax_player)[d.argmax_battlefield])
    b = float(ms.upper[d.argmax_battlefield])
    # the set is closed; the maximizer can sit exactly on a threshold, so allow round-off there
    member = lambda x: gap_to_blotto(side, x, d.argmax_y) >= eps * (1 - 1e-9)
    rescan = uniform_type_mass_by_scan(p0, b, member, b, points=100_001)
    assert rescan <= d.delta + 3e-5
    assert rescan >= d.delta / (1 + 1e-6) - 3e-5


def test_delta_is_the_max_over_a_dense_center_scan():
    g, s = solved(1.0, 1.3, [2, 1, 1], [1, 1, 2])
    rule = ContestSuccessFunction.logit(30.0, 0.5)
    eps = 0.2
    d = delta_bound(g, s, rule, eps)
    ms = uniform_type_marginals(g, s)
    best = 0.0
    for player, side in (("A", rule), ("B", rule.swapped())):
        for c in np.linspace(0, 2 * g.budget_b, 301):
            for i in range(g.n):
                p0 = float(ms.zero_mass(player)[i])
                b = float(ms.upper[i])
                member = lambda x: gap_to_blotto(side, x, c) >= eps
                best = max(best, uniform_type_mass_by_scan(p0, b, member, b, points=20_001))
    assert best <= d.delta + 1e-3


def test_custom_delta_flags_non_lipschitz():
    g, s = solved(1.0, 1.5, [3, 1, 2], [1, 2, 2])
    rule = ContestSuccessFunction.custom(lambda x, y: 0.5 / (0.5 + 0.5 * np.exp(20 * (y - x))), 0.5)
    with pytest.warns(UserWarning):
        d = delta_bound(g, s, rule, 0.1, grid=100)
    assert d.flagged and d.closed_form is None
    ref = delta_bound(g, s, ContestSuccessFunction.logit(20.0, 0.5), 0.1, grid=100)
    # a grid supremum: never above the kink-aware built-in value, and close to it
    assert d.delta <= ref.delta + 1e-9
    assert d.delta >= 0.95 * ref.delta


def test_closed_form_is_none_for_other_kinds():
    g, _ = solved(1.0, 1.5, [3, 1, 2], [1, 2, 2])
    assert closed_form_delta(g, ContestSuccessFunction.blotto(0.5), 0.1) is None
