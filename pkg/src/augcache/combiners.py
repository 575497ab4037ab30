"""Black-box combination of two eviction policies.

Both wrapped policies run on their own virtual caches, exactly as they would
standalone. The physical cache follows one of them and is synchronised
lazily: on a physical miss it evicts something the followed side does not
hold, so it never pays for a switch up front.
"""

from __future__ import annotations

import math
import random

from augcache.engine import Policy, PolicyError

SIDES = ("A", "B")
DEFAULT_GAMMA = 1.2
DEFAULT_EPSILON = 0.1


class _Virtual:
    __slots__ = ("policy", "cache", "misses", "victim")

    def __init__(self, policy: Policy):
        self.policy = policy
        self.cache: set[str] = set()
        self.misses = 0
        self.victim: str | None = None

    def serve(self, t: int, tag: str, k: int | None) -> bool:
        cache = self.cache
        full = k is not None and len(cache) >= k
        victim = self.policy.step(t, tag, cache, full)
        self.victim = None
        if tag in cache:
            if victim is not None:
                raise PolicyError(self.policy.name, t, f"returned victim {victim!r} on a hit")
            return False
        self.misses += 1
        if full:
            if victim is None or victim not in cache:
                raise PolicyError(self.policy.name, t, f"bad victim {victim!r}")
            cache.remove(victim)
            self.victim = victim
        elif victim is not None:
            raise PolicyError(self.policy.name, t, "evicted although the cache has room")
        cache.add(tag)
        return True


class _Combiner(Policy):
    def __init__(self, a: Policy, b: Policy):
        self.sides = (_Virtual(a), _Virtual(b))
        self.followed = 0
        self.switches = 0
        self.follow_log: list[str] = []
        self.misses_log: list[tuple[int, int]] = []
        self.name = f"{a.name}+{b.name}"
        # Capacity is learned from the first full physical cache. Until the
        # first eviction every cache holds exactly the distinct tags seen so
        # far, so virtual and physical fullness coincide.
        self._k: int | None = None

    @property
    def annotations(self) -> list[str]:
        return self.follow_log

    def _choose_side(self, t: int) -> None:
        raise NotImplementedError

    def step(self, t, tag, cache, is_full):
        if is_full and self._k is None:
            self._k = len(cache)
        self._choose_side(t)
        a, b = self.sides
        a.serve(t, tag, self._k)
        b.serve(t, tag, self._k)
        self.follow_log.append(SIDES[self.followed])
        self.misses_log.append((a.misses, b.misses))
        if tag in cache or not is_full:
            return None
        followed = self.sides[self.followed]
        stale = cache - followed.cache
        if stale:
            return min(stale)
        return followed.victim


class DeterministicCombiner(_Combiner):
    """Follows one side until its misses exceed ``gamma`` times the other's."""

    def __init__(self, a: Policy, b: Policy, gamma: float = DEFAULT_GAMMA):
        if not gamma > 1:
            raise ValueError("gamma must be > 1")
        super().__init__(a, b)
        self.gamma = gamma
        self.name = f"{self.name}|det:{gamma:g}"

    def _choose_side(self, t):
        if t == 0:
            return
        mine = self.sides[self.followed].misses
        other = self.sides[1 - self.followed].misses
        if mine > self.gamma * other:
            self.followed = 1 - self.followed
            self.switches += 1


class RandomizedCombiner(_Combiner):
    """Multiplicative weights over the two sides with minimal-switching coupling.

    Each virtual miss multiplies that side's weight by ``1 - epsilon``. When
    the followed side's probability drops from ``p`` to ``q`` the combiner
    moves away with probability ``(p - q) / p``, which keeps the followed
    side distributed according to the weights.
    """

    def __init__(self, a: Policy, b: Policy, epsilon: float = DEFAULT_EPSILON, seed: int = 0):
        if not 0 < epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        super().__init__(a, b)
        self.epsilon = epsilon
        self.rng = random.Random(seed)
        self.name = f"{self.name}|rand:{epsilon:g}"
        self._log_decay = math.log1p(-epsilon)
        self.followed = 0 if self.rng.random() < 0.5 else 1
        self._p_prev = 0.5

    def probability(self, side: int) -> float:
        """Current weight share of ``side``."""
        la = self.sides[0].misses * self._log_decay
        lb = self.sides[1].misses * self._log_decay
        diff = (lb - la) if side == 0 else (la - lb)
        # p = 1 / (1 + exp(diff)) computed without overflow
        if diff > 0:
            e = math.exp(-diff)
            return e / (1.0 + e)
        return 1.0 / (1.0 + math.exp(diff))

    def _choose_side(self, t):
        if t == 0:
            return
        p_new = self.probability(self.followed)
        p_prev = self._p_prev
        if p_new < p_prev and self.rng.random() < (p_prev - p_new) / p_prev:
            self.followed = 1 - self.followed
            self.switches += 1
            p_new = 1.0 - p_new
        self._p_prev = p_new


def combine_deterministic(a: Policy, b: Policy, gamma: float = DEFAULT_GAMMA) -> DeterministicCombiner:
    return DeterministicCombiner(a, b, gamma)


def combine_randomized(a: Policy, b: Policy, epsilon: float = DEFAULT_EPSILON, seed: int = 0) -> RandomizedCombiner:
    return RandomizedCombiner(a, b, epsilon, seed)


def follow_log(state: _Combiner) -> list[str]:
    return list(state.follow_log)
