import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from augcache.augmented import make_blind_oracle
from augcache.classical import make_lru, make_marker
from augcache.combiners import (
    DeterministicCombiner,
    RandomizedCombiner,
    combine_deterministic,
    combine_randomized,
    follow_log,
)
from augcache.engine import Policy, simulate
from augcache.oracle import BeladyPolicy, belady
from augcache.predictors import adversarial_reuse, noisy_reuse
from augcache.trace import compute_next_use
from augcache.workloads import Segment, gen_phased, gen_scan_loop, gen_zipf


class EvictNextRequested(Policy):
    """Pathological: evicts the cached item needed soonest."""

    name = "worst"

    def __init__(self, next_use):
        self.next_use = next_use
        self.next_of = {}

    def step(self, t, tag, cache, is_full):
        victim = None
        if is_full and tag not in cache:
            victim = min(cache, key=lambda x: (self.next_of[x], x))
        self.next_of[tag] = self.next_use[t]
        return victim


def _transitions(log):
    return sum(1 for x, y in zip(log, log[1:]) if x != y)


def test_identical_sides_never_switch():
    trace = gen_zipf(1500, 40, 0.9, seed=1)
    comb = combine_deterministic(make_lru(), make_lru())
    result = simulate(comb, trace, 6)
    assert comb.switches == 0
    assert set(follow_log(comb)) == {"A"}
    assert result.misses == simulate(make_lru(), trace, 6).misses


def test_huge_gamma_never_switches():
    trace = gen_scan_loop(500, 9)
    nu = compute_next_use(trace)
    comb = combine_deterministic(EvictNextRequested(nu), BeladyPolicy(nu), gamma=1e12)
    simulate(comb, trace, 4)
    assert comb.switches == 0 and set(comb.follow_log) == {"A"}


@pytest.mark.parametrize("order, gamma", [("opt-first", 2.0), ("worst-first", 1.5)])
def test_opt_versus_pathological_on_a_loop(order, gamma):
    # 12 requests, k=2: OPT misses 7 times, the pathological side 12 times
    trace = list("abcabcabcabc")
    k = 2
    nu = compute_next_use(trace)
    opt = belady(trace, k).opt_cost
    assert opt == 7
    sides = [BeladyPolicy(nu), EvictNextRequested(nu)]
    if order == "worst-first":
        sides.reverse()
    comb = combine_deterministic(*sides, gamma=gamma)
    result = simulate(comb, trace, k)
    assert comb.switches <= 1
    assert comb.follow_log[-1] == ("A" if order == "opt-first" else "B")
    assert result.misses <= gamma * opt + k


def test_gamma_must_exceed_one():
    with pytest.raises(ValueError):
        DeterministicCombiner(make_lru(), make_lru(), gamma=1.0)
    with pytest.raises(ValueError):
        RandomizedCombiner(make_lru(), make_lru(), epsilon=0.0)


def _runs(trace, k):
    nu = compute_next_use(trace)
    for seed in range(3):
        yield "det", combine_deterministic(make_blind_oracle(noisy_reuse(nu, 2.0, seed)), make_marker(seed), 1.5)
        yield "rand", combine_randomized(make_blind_oracle(adversarial_reuse(nu)), make_marker(seed), 0.1, seed)


TRACES = [
    gen_zipf(1500, 50, 0.8, seed=3),
    gen_phased([Segment("zipf", 600, 30), Segment("scanloop", 600, m=9), Segment("zipf", 600, 40, 1.2)], 2),
]


@pytest.mark.parametrize("trace", TRACES, ids=["zipf", "phased"])
def test_virtual_sides_match_standalone_runs(trace):
    k = 6
    nu = compute_next_use(trace)
    for seed in range(3):
        comb = combine_deterministic(make_blind_oracle(noisy_reuse(nu, 1.0, seed)), make_marker(seed))
        simulate(comb, trace, k)
        a = simulate(make_blind_oracle(noisy_reuse(nu, 1.0, seed)), trace, k)
        b = simulate(make_marker(seed), trace, k)
        prefix_a = list(itertools.accumulate(not d.hit for d in a.decisions))
        prefix_b = list(itertools.accumulate(not d.hit for d in b.decisions))
        assert [m for m, _ in comb.misses_log] == prefix_a
        assert [m for _, m in comb.misses_log] == prefix_b


@pytest.mark.parametrize("trace", TRACES, ids=["zipf", "phased"])
def test_follow_log_shape(trace):
    for _, comb in _runs(trace, 6):
        simulate(comb, trace, 6)
        log = follow_log(comb)
        assert len(log) == len(trace)
        assert set(log) <= {"A", "B"}
        assert _transitions(log) == comb.switches


@pytest.mark.parametrize("trace", TRACES, ids=["zipf", "phased"])
def test_deterministic_switch_point_invariant(trace):
    for kind, comb in _runs(trace, 6):
        if kind != "det":
            continue
        simulate(comb, trace, 6)
        for side, (a, b) in zip(comb.follow_log, comb.misses_log):
            mine, other = (a, b) if side == "A" else (b, a)
            assert mine <= comb.gamma * other + 1


def test_lazy_sync_agrees_with_followed_side_once_settled():
    trace = gen_zipf(2000, 40, 0.9, seed=7)
    comb = combine_deterministic(make_lru(), make_lru())
    result = simulate(comb, trace, 5)
    alone = simulate(make_lru(), trace, 5)
    assert result.cache_states == alone.cache_states


def test_physical_misses_within_deterministic_envelope():
    k = 6
    for trace in TRACES:
        for kind, comb in _runs(trace, k):
            result = simulate(comb, trace, k)
            a, b = comb.misses_log[-1]
            if kind == "det":
                assert result.misses <= comb.gamma * min(a, b) + k * (comb.switches + 1)


def test_randomized_same_seed_same_log():
    trace = gen_zipf(1200, 40, 0.8, seed=5)
    nu = compute_next_use(trace)
    logs = []
    for _ in range(2):
        comb = combine_randomized(make_blind_oracle(adversarial_reuse(nu)), make_marker(4), 0.1, seed=9)
        simulate(comb, trace, 6)
        logs.append(follow_log(comb))
    assert logs[0] == logs[1]


def test_randomized_no_switch_when_both_hit():
    trace = list("abcabcabca")
    for seed in range(20):
        comb = combine_randomized(make_lru(), make_marker(seed), 0.1, seed)
        simulate(comb, trace, 3)
        assert comb.switches == 0
        assert comb.probability(0) == 0.5


def test_randomized_coupling_probabilities():
    eps, n = 0.1, 4000
    stayed = 0
    for seed in range(n):
        comb = combine_randomized(make_lru(), make_lru(), eps, seed)
        comb.followed, comb._p_prev = 0, 0.5
        for t in range(1, 11):
            comb.sides[0].misses += 1  # A misses, B hits
            comb._choose_side(t)
        stayed += comb.followed == 0
    ratio = 0.9**10
    assert ratio == pytest.approx(0.349, abs=1e-3)
    p_a = ratio / (1 + ratio)
    assert comb.probability(0) == pytest.approx(p_a)
    # Minimal switching: P(still on A) = p_a / p_a(0).
    assert stayed / n == pytest.approx(p_a / 0.5, abs=0.03)


def test_randomized_follows_weights_from_the_start():
    n = 4000
    starts = sum(RandomizedCombiner(make_lru(), make_lru(), 0.1, s).followed for s in range(n))
    assert starts / n == pytest.approx(0.5, abs=0.03)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from("abcdefgh"), max_size=60), st.integers(1, 4), st.integers(0, 50))
def test_combined_cache_is_always_valid(items, k, seed):
    nu = compute_next_use(items)
    for comb in (
        combine_deterministic(make_blind_oracle(adversarial_reuse(nu)), make_marker(seed)),
        combine_randomized(EvictNextRequested(nu), BeladyPolicy(nu), 0.3, seed),
    ):
        simulate(comb, items, k)  # the engine validates every victim
        assert len(comb.follow_log) == len(items)


class LagWatch(DeterministicCombiner):
    """Records how many physical items the followed side does not hold."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.lag = []

    def step(self, t, tag, cache, is_full):
        before = self.misses_log[-1] if self.misses_log else (0, 0)
        victim = super().step(t, tag, cache, is_full)
        f = self.followed
        followed_hit = self.misses_log[-1][f] == before[f]
        post = (cache - {victim}) | {tag} if victim else cache | {tag}
        physical_miss = tag not in cache and is_full
        self.lag.append((self.switches, len(post - self.sides[f].cache), physical_miss and followed_hit))
        return victim


@pytest.mark.parametrize("trace", TRACES + [gen_zipf(3000, 90, 1.0, seed=11)], ids=["zipf", "phased", "zipf2"])
def test_lazy_sync_lag_shrinks_between_switches(trace):
    # Between switches the lag never grows, and every physical miss on which
    # the followed side hit closes it by one. So after a switch at most k such
    # misses are paid before the caches agree.
    k = 6
    nu = compute_next_use(trace)
    for seed in range(3):
        comb = LagWatch(make_blind_oracle(adversarial_reuse(nu)), make_marker(seed), 1.2)
        simulate(comb, trace, k)
        assert comb.switches > 0
        for (sw0, lag0, _), (sw1, lag1, sync_miss) in zip(comb.lag, comb.lag[1:]):
            assert lag1 <= k
            if sw0 == sw1:
                assert lag1 <= lag0
                if sync_miss:
                    assert lag1 == lag0 - 1
