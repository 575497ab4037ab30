import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from augcache.classical import make_lru
from augcache.engine import Decision, SimulationResult, simulate
from augcache.metrics import (
    CSV_FIELDS,
    ConsistencyError,
    MetricUndefined,
    RunResult,
    aggregate,
    competitive_ratio,
    hit_rate,
    jaccard,
    lru_normalized,
    prediction_usage,
)
from augcache.oracle import belady


def _fake(misses, L):
    decisions = [Decision(False, None)] * misses + [Decision(True, None)] * (L - misses)
    return SimulationResult(decisions, misses, [], [], "x")


def _row(**kw):
    base = dict(
        trace="t", set=0, algorithm="lru", predictor="-", seed=0, k=4, requests=10, misses=5,
        opt_cost=4, hit_rate=0.5, cr=1.25, lru_norm=1.0, eta_reuse=math.nan, eta_cache=math.nan,
        usage_jaccard=math.nan, switches=0,
    )
    base.update(kw)
    return RunResult(**base)


def test_header_matches_the_results_format():
    assert ",".join(CSV_FIELDS) == (
        "trace,set,algorithm,predictor,seed,k,requests,misses,opt_cost,"
        "hit_rate,cr,lru_norm,eta_reuse,eta_cache,usage_jaccard,switches"
    )


def test_hit_rate_examples():
    assert hit_rate(_fake(4, 6)) == pytest.approx(1 / 3)
    items = list("abcabcab")
    opt = belady(items, 3).result
    assert hit_rate(opt) == (8 - 3) / 8
    with pytest.raises(MetricUndefined):
        hit_rate(_fake(0, 0))


@given(st.lists(st.sampled_from("abcdef"), min_size=1, max_size=30), st.integers(1, 4))
def test_opt_has_the_best_hit_rate(items, k):
    assert hit_rate(belady(items, k).result) >= hit_rate(simulate(make_lru(), items, k))


def test_competitive_ratio():
    assert competitive_ratio(150, 100) == 1.5
    assert competitive_ratio(7, 7) == 1.0
    assert competitive_ratio(0, 0) == 1.0
    with pytest.raises(ConsistencyError):
        competitive_ratio(99, 100)
    with pytest.raises(MetricUndefined):
        competitive_ratio(3, 0)


def test_lru_normalized():
    assert lru_normalized(1.0, 1.32) == 0.0
    assert lru_normalized(1.32, 1.32) == 1.0
    assert abs(lru_normalized(1.20, 1.32) - 0.625) <= 1e-9
    with pytest.raises(MetricUndefined):
        lru_normalized(1.0, 1.0)


def test_jaccard():
    assert jaccard({"a", "b", "c", "d"}, {"a", "b", "c", "e"}) == pytest.approx(0.6)
    assert jaccard(set(), set()) == 1.0
    assert jaccard({"a"}, {"b"}) == 0.0


sets = st.frozensets(st.sampled_from("abcdefgh"))


@given(sets, sets)
def test_jaccard_symmetric_and_bounded(a, b):
    assert jaccard(a, b) == jaccard(b, a)
    assert 0.0 <= jaccard(a, b) <= 1.0


@given(sets, sets)
def test_jaccard_invariant_under_renaming(a, b):
    rename = {c: c.upper() * 2 for c in "abcdefgh"}
    assert jaccard(a, b) == jaccard({rename[x] for x in a}, {rename[x] for x in b})


def test_prediction_usage():
    states = [{"a"}, {"a", "b"}]
    assert prediction_usage(states, states) == 1.0
    assert prediction_usage([{"a"}, {"a", "b"}], [{"a"}, {"a", "c"}]) == pytest.approx((1 + 1 / 3) / 2)
    with pytest.raises(ValueError):
        prediction_usage(states, states[:1])


def test_aggregate_single_row_is_itself():
    (row,) = aggregate([_row()])
    assert row["n"] == 1 and row["cr_mean"] == row["cr_min"] == row["cr_max"] == 1.25
    assert math.isnan(row["eta_reuse_mean"])


def test_aggregate_mean():
    (row,) = aggregate([_row(cr=1.2), _row(cr=1.4, set=1)])
    assert row["cr_mean"] == pytest.approx(1.3)
    assert (row["cr_min"], row["cr_max"]) == (1.2, 1.4)


def test_aggregate_one_row_per_algorithm():
    rows = [_row(algorithm=a, set=s) for a in ("lru", "marker", "opt") for s in range(64)]
    out = aggregate(rows, ("algorithm",))
    assert [r["algorithm"] for r in out] == ["lru", "marker", "opt"]
    assert all(r["n"] == 64 for r in out)


def test_aggregate_empty():
    with pytest.raises(ValueError):
        aggregate([])


def test_row_drops_follow_log():
    row = _row(follow_log=["A", "B"]).row()
    assert list(row) == CSV_FIELDS
