"""Prediction-free baselines: LRU, Random and the randomized Marker algorithm."""

from __future__ import annotations

import random
from collections import OrderedDict

from augcache.engine import Policy


class LRUPolicy(Policy):
    name = "lru"

    def __init__(self):
        self.recency: OrderedDict[str, None] = OrderedDict()

    def step(self, t, tag, cache, is_full):
        recency = self.recency
        if tag in cache:
            recency.move_to_end(tag)
            return None
        victim = None
        if is_full:
            victim, _ = recency.popitem(last=False)
        recency[tag] = None
        return victim


class RandomPolicy(Policy):
    name = "random"

    def __init__(self, seed: int = 0):
        self.rng = random.Random(seed)

    def step(self, t, tag, cache, is_full):
        if tag in cache or not is_full:
            return None
        # sorted: set order of str depends on the hash seed
        return self.rng.choice(sorted(cache))


class MarkerPolicy(Policy):
    """Marking algorithm with uniformly random eviction among unmarked items.

    A new phase starts at the miss that finds every cached item marked; the
    marks are cleared before the victim is drawn.
    """

    name = "marker"

    def __init__(self, seed: int = 0):
        self.rng = random.Random(seed)
        self.marks: set[str] = set()
        self.phase = 0
        self.phase_starts: list[int] = []

    def step(self, t, tag, cache, is_full):
        marks = self.marks
        if tag in cache or not is_full:
            marks.add(tag)
            return None
        unmarked = cache - marks
        if not unmarked:
            self.phase += 1
            self.phase_starts.append(t)
            marks.clear()
            unmarked = cache
        victim = self.rng.choice(sorted(unmarked))
        marks.add(tag)
        return victim


def make_lru() -> LRUPolicy:
    return LRUPolicy()


def make_random(seed: int = 0) -> RandomPolicy:
    return RandomPolicy(seed)


def make_marker(seed: int = 0) -> MarkerPolicy:
    return MarkerPolicy(seed)
