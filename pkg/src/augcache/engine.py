"""The shared simulation loop that drives any eviction policy over a trace."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import NamedTuple

from augcache.trace import CacheConfig


class PolicyError(RuntimeError):
    """A policy broke the step contract (bad or missing victim)."""

    def __init__(self, policy: str, t: int, message: str):
        self.policy = policy
        self.t = t
        super().__init__(f"policy {policy!r} at step {t}: {message}")


class Policy:
    """Base class for eviction policies.

    ``step`` is called once per request, before the request is served. It
    must return ``None`` on a hit or while the cache still has room, and a
    tag currently in ``cache`` when the cache is full and ``tag`` is absent.
    ``cache`` is owned by the caller and must not be mutated.

    Policies that want per-step annotations in the simulation result expose
    them as a list in ``annotations``.
    """

    name = "policy"

    def step(self, t: int, tag: str, cache: set[str], is_full: bool) -> str | None:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


class Decision(NamedTuple):
    hit: bool
    victim: str | None = None

    @property
    def result(self) -> str:
        return "hit" if self.hit else "miss"


@dataclass
class SimulationResult:
    decisions: list[Decision]
    misses: int
    cache_states: list[frozenset[str]] = field(default_factory=list)
    aux: list | None = None
    policy: str = ""

    @property
    def requests(self) -> int:
        return len(self.decisions)

    @property
    def victims(self) -> list[str]:
        return [d.victim for d in self.decisions if d.victim is not None]


def simulate(
    policy: Policy,
    trace: Sequence[str],
    config: CacheConfig | int,
    record_states: bool = True,
) -> SimulationResult:
    k = config if isinstance(config, int) else config.k
    if k < 1:
        raise ValueError(f"cache size must be >= 1, got {k}")
    cache: set[str] = set()
    decisions: list[Decision] = []
    states: list[frozenset[str]] = []
    misses = 0
    step = policy.step
    hit_decision = Decision(True)
    load_decision = Decision(False)
    for t, tag in enumerate(trace):
        full = len(cache) >= k
        victim = step(t, tag, cache, full)
        if tag in cache:
            if victim is not None:
                raise PolicyError(policy.name, t, f"returned victim {victim!r} on a hit")
            decisions.append(hit_decision)
        else:
            misses += 1
            if full:
                if victim is None:
                    raise PolicyError(policy.name, t, "no victim although the cache is full")
                if victim not in cache:
                    raise PolicyError(policy.name, t, f"victim {victim!r} is not cached")
                cache.remove(victim)
                decisions.append(Decision(False, victim))
            else:
                if victim is not None:
                    raise PolicyError(policy.name, t, "evicted although the cache has room")
                decisions.append(load_decision)
            cache.add(tag)
        if record_states:
            states.append(frozenset(cache))
    aux = list(policy.annotations) if hasattr(policy, "annotations") else None
    return SimulationResult(decisions, misses, states, aux, policy.name)
