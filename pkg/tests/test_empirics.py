import io
import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mevcore.empirics import (
    BackrunParseError,
    BackrunRecord,
    GroupMedian,
    HistogramBin,
    RegressionResult,
    analyze,
    group_median_profit,
    groups_to_csv,
    histogram_counts,
    histogram_to_csv,
    ols_log_median,
    parse_backrun_csv,
    records_to_csv,
    synthesize_backruns,
)

FIXTURES = Path(__file__).parent / "fixtures"

records_st = st.lists(
    st.builds(
        BackrunRecord,
        st.text("abc", max_size=3),
        st.integers(0, 30),
        st.floats(0, 100, allow_nan=False, allow_infinity=False),
    ),
    max_size=40,
)


def parse(text):
    return parse_backrun_csv(io.StringIO(text))


# -- ingestion -------------------------------------------------------------------


def test_parse_two_rows():
    recs = parse("target_id,backrun_count,profit\na,3,0.5\nb,0,0.2\n")
    assert recs == [BackrunRecord("a", 3, 0.5), BackrunRecord("b", 0, 0.2)]


@pytest.mark.parametrize("text", ["", "target_id,backrun_count,profit\n"])
def test_parse_empty(text):
    assert parse(text) == []


def test_parse_skips_blank_lines():
    assert len(parse("target_id,backrun_count,profit\n\na,1,2\n")) == 1


@pytest.mark.parametrize(
    "text,msg",
    [
        ("id,count,profit\na,1,1\n", "row 1"),
        ("target_id,backrun_count,profit\na,1,-1\n", "row 2"),
        ("target_id,backrun_count,profit\na,1,1\nb,x,1\n", "row 3.*integer"),
        ("target_id,backrun_count,profit\na,-2,1\n", "row 2"),
        ("target_id,backrun_count,profit\na,1\n", "row 2.*3 fields"),
        ("target_id,backrun_count,profit\na,1,nan\n", "row 2"),
        ("target_id,backrun_count,profit\na,1,abc\n", "not a number"),
    ],
)
def test_parse_errors(text, msg):
    with pytest.raises(BackrunParseError, match=msg):
        parse(text)


@settings(max_examples=60, deadline=None)
@given(records_st)
def test_csv_round_trip(records):
    records = [r for r in records if "," not in r.target_id]
    assert parse(records_to_csv(records)) == records


# -- aggregation -------------------------------------------------------------------


def test_group_median_example():
    recs = [BackrunRecord("a", 3, 0.5), BackrunRecord("b", 3, 1.5), BackrunRecord("c", 0, 0.2)]
    assert group_median_profit(recs) == [GroupMedian(0, 0.2, 1), GroupMedian(3, 1.0, 2)]


def test_group_median_single():
    assert group_median_profit([BackrunRecord("a", 2, 4.0)]) == [GroupMedian(2, 4.0, 1)]


def test_group_median_odd():
    recs = [BackrunRecord(str(i), 1, v) for i, v in enumerate([5.0, 1.0, 3.0])]
    assert group_median_profit(recs)[0].median == 3.0


@settings(max_examples=60, deadline=None)
@given(records_st, st.randoms(use_true_random=False))
def test_group_median_permutation_invariant(records, rnd):
    shuffled = list(records)
    rnd.shuffle(shuffled)
    assert group_median_profit(shuffled) == group_median_profit(records)


def test_histogram_example():
    recs = [BackrunRecord(str(c), c, 1.0) for c in (0, 4, 5)]
    assert histogram_counts(recs) == [HistogramBin(0, 4, 2), HistogramBin(5, 9, 1)]
    assert histogram_counts([]) == []


def test_histogram_rejects_bad_width():
    with pytest.raises(ValueError):
        histogram_counts([], 0)


@settings(max_examples=60, deadline=None)
@given(records_st, st.integers(1, 12))
def test_histogram_counts_sum(records, width):
    bins = histogram_counts(records, width)
    assert sum(b.count for b in bins) == len(records)
    assert all(b.high - b.low + 1 == width for b in bins)


def test_histogram_skewed_to_zero_at_low_competition():
    recs = synthesize_backruns(2000, 100, 0.005, seed=0)
    bins = histogram_counts(recs)
    assert bins[0].count > 0.95 * len(recs)


def test_unit_profit_medians_trend_up():
    # with unit values the validator floor is 1 exactly when two or more searchers find the target
    recs = synthesize_backruns(10_000, 50, 0.03, seed=1, profit="unit")
    meds = [g.median for g in group_median_profit(recs)]
    assert meds[0] == meds[1] == 0.0
    assert all(m == 1.0 for m in meds[2:])
    assert all(a <= b for a, b in zip(meds, meds[1:]))


# -- regression --------------------------------------------------------------------------------


def exact_line_groups(c0=1.0, c1=2.0, xs=(0, 1, 2)):
    return [GroupMedian(x, math.exp(c0 + c1 * x), 1) for x in xs]


def test_exact_line():
    r = ols_log_median(exact_line_groups())
    assert r.slope == pytest.approx(2.0, abs=1e-12)
    assert r.intercept == pytest.approx(1.0, abs=1e-12)
    assert r.r_squared == 1.0
    assert r.n_obs == 3
    assert r.stderr_slope == pytest.approx(0.0, abs=1e-6)


def test_constant_medians_give_r2_one():
    r = ols_log_median([GroupMedian(x, 2.0, 1) for x in range(4)])
    assert r.slope == pytest.approx(0.0, abs=1e-15)
    assert r.r_squared == 1.0


def test_zero_medians_dropped():
    groups = exact_line_groups(xs=(0, 1, 2, 3)) + [GroupMedian(9, 0.0, 4)]
    r = ols_log_median(groups)
    assert r.n_dropped == 1
    assert r.n_obs == 4
    assert r.slope == pytest.approx(2.0)


@pytest.mark.parametrize(
    "groups,msg",
    [
        (exact_line_groups(xs=(0, 1)), "at least 3"),
        ([GroupMedian(0, 0.0, 1)] * 3, "at least 3"),
        ([GroupMedian(2, v, 1) for v in (1.0, 2.0, 3.0)], "variance"),
    ],
)
def test_regression_errors(groups, msg):
    with pytest.raises(ValueError, match=msg):
        ols_log_median(groups)


def planted_groups(seed, slope=0.05, sigma=0.1, k=200):
    rng = np.random.default_rng(seed)
    xs = np.arange(k)
    ys = -1.0 + slope * xs + sigma * rng.standard_normal(k)
    return [GroupMedian(int(x), float(math.exp(y)), int(rng.integers(1, 20))) for x, y in zip(xs, ys)]


@pytest.mark.parametrize("seed", range(5))
def test_planted_slope_recovered(seed):
    r = ols_log_median(planted_groups(seed))
    assert abs(r.slope - 0.05) <= 3 * r.stderr_slope


@pytest.mark.parametrize("weighted", [False, True])
def test_matches_statsmodels(weighted):
    sm = pytest.importorskip("statsmodels.api")
    groups = planted_groups(7, slope=0.02, sigma=0.5, k=60)
    x = np.array([g.backrun_count for g in groups], dtype=float)
    y = np.log([g.median for g in groups])
    X = sm.add_constant(x)
    fit = sm.WLS(y, X, weights=[g.size for g in groups]).fit() if weighted else sm.OLS(y, X).fit()
    r = ols_log_median(groups, weighted=weighted)
    assert r.intercept == pytest.approx(fit.params[0], rel=1e-9)
    assert r.slope == pytest.approx(fit.params[1], rel=1e-9)
    assert r.stderr_intercept == pytest.approx(fit.bse[0], rel=1e-9)
    assert r.stderr_slope == pytest.approx(fit.bse[1], rel=1e-9)
    assert r.r_squared == pytest.approx(fit.rsquared, rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32), st.floats(1e-3, 1e3))
def test_affine_equivariance(seed, k):
    groups = planted_groups(seed, sigma=0.3, k=20)
    base = ols_log_median(groups)
    scaled = ols_log_median([GroupMedian(g.backrun_count, g.median * k, g.size) for g in groups])
    assert scaled.intercept == pytest.approx(base.intercept + math.log(k), abs=1e-9)
    assert scaled.slope == pytest.approx(base.slope, abs=1e-9)
    assert scaled.r_squared == pytest.approx(base.r_squared, abs=1e-9)


def test_published_fixture_round_trip():
    doc = json.loads((FIXTURES / "published_regression.json").read_text())
    r = RegressionResult.from_dict(doc)
    assert (r.intercept, r.slope, r.r_squared, r.n_obs) == (-6.087, 0.011, 0.340, 110)
    assert (r.stderr_intercept, r.stderr_slope) == (0.107, 0.002)
    assert RegressionResult.from_dict(json.loads(r.to_json())) == r


def test_to_json_six_significant_digits():
    r = RegressionResult(1 / 3, 2 / 3, 0.123456789, 5, 0.1, 0.2)
    doc = json.loads(r.to_json())
    assert doc["intercept"] == 0.333333
    assert doc["r_squared"] == 0.123457


def test_csv_writers():
    assert groups_to_csv([GroupMedian(0, 1 / 3, 2)]) == "backrun_count,median_profit,group_size\n0,0.333333,2\n"
    assert histogram_to_csv([HistogramBin(0, 4, 2)]) == "bin_low,bin_high,count\n0,4,2\n"


# -- synthesis bridge -----------------------------------------------------------------------


def test_synthesis_is_deterministic():
    assert synthesize_backruns(300, 40, 0.05, seed=3) == synthesize_backruns(300, 40, 0.05, seed=3)
    assert synthesize_backruns(300, 40, 0.05, seed=3) != synthesize_backruns(300, 40, 0.05, seed=4)


def test_synthesis_rejects_unknown_profit():
    with pytest.raises(ValueError):
        synthesize_backruns(3, 3, 0.5, seed=0, profit="gross")


@pytest.mark.parametrize("seed", range(3))
def test_synthesized_slope_nonnegative(seed):
    _, _, reg = analyze(synthesize_backruns(5000, 60, 0.08, seed=seed))
    assert reg.slope >= 0
