"""Belady's offline optimum and an exhaustive-search oracle for tiny inputs."""

from __future__ import annotations

import heapq
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from functools import lru_cache

from augcache.engine import Policy, SimulationResult, simulate
from augcache.trace import CacheConfig, NextUseTable, Trace, compute_next_use

BRUTE_FORCE_MAX_LEN = 14
BRUTE_FORCE_MAX_DISTINCT = 7


class OracleBoundsError(ValueError):
    pass


def furthest_victim(cache, next_of: Mapping[str, int]) -> str:
    """Belady's rule over ``cache``: latest next use wins, ties to the smallest tag."""
    return min(cache, key=lambda tag: (-next_of[tag], tag))


class BeladyPolicy(Policy):
    """Evicts the cached tag whose next request is furthest away.

    Keeps a max-heap keyed by (next use, tag) with lazy invalidation, so a
    step costs O(log L) amortised.
    """

    name = "opt"

    def __init__(self, next_use: NextUseTable):
        self.next_use = next_use
        self.next_of: dict[str, int] = {}
        self._heap: list[tuple[int, str]] = []

    def step(self, t, tag, cache, is_full):
        victim = None
        if is_full and tag not in cache:
            heap = self._heap
            next_of = self.next_of
            while True:
                neg, cand = heap[0]
                if cand in cache and next_of[cand] == -neg:
                    break
                heapq.heappop(heap)
            victim = cand
            heapq.heappop(heap)
        nxt = self.next_use[t]
        self.next_of[tag] = nxt
        heapq.heappush(self._heap, (-nxt, tag))
        return victim


@dataclass
class OptProfile:
    result: SimulationResult
    victims: list[str]
    opt_cost: int
    trace: Trace
    k: int
    next_use: NextUseTable

    @property
    def miss_positions(self) -> list[int]:
        return [t for t, d in enumerate(self.result.decisions) if not d.hit]


def belady(
    trace: Trace | Sequence[str],
    config: CacheConfig | int,
    next_use: NextUseTable | None = None,
    record_states: bool = True,
) -> OptProfile:
    if not isinstance(trace, Trace):
        trace = Trace(tuple(trace))
    k = config if isinstance(config, int) else config.k
    if next_use is None:
        next_use = compute_next_use(trace)
    elif len(next_use) != len(trace):
        raise ValueError("next-use table does not match the trace")
    result = simulate(BeladyPolicy(next_use), trace, k, record_states)
    return OptProfile(result, result.victims, result.misses, trace, k, next_use)


def opt_cache_states(profile: OptProfile) -> list[frozenset[str]]:
    states = profile.result.cache_states
    if len(states) != profile.result.requests:
        raise ValueError("OPT run was made without state recording")
    return states


def brute_force_opt(trace: Sequence[str], config: CacheConfig | int) -> int:
    """Minimum miss count over every possible sequence of eviction choices.

    Test oracle only: refuses inputs beyond a small size bound.
    """
    k = config if isinstance(config, int) else config.k
    items = tuple(trace)
    if len(items) > BRUTE_FORCE_MAX_LEN or len(set(items)) > BRUTE_FORCE_MAX_DISTINCT:
        raise OracleBoundsError(
            f"brute force limited to L <= {BRUTE_FORCE_MAX_LEN} and "
            f"<= {BRUTE_FORCE_MAX_DISTINCT} distinct tags"
        )

    @lru_cache(maxsize=None)
    def best(t: int, cache: frozenset) -> int:
        if t == len(items):
            return 0
        tag = items[t]
        if tag in cache:
            return best(t + 1, cache)
        if len(cache) < k:
            return 1 + best(t + 1, cache | {tag})
        return 1 + min(best(t + 1, (cache - {v}) | {tag}) for v in cache)

    return best(0, frozenset())
