"""Synthetic predictors for both prediction setups, and their error measures.

Reuse predictors answer "when will the item requested at ``t`` be requested
again?" with a trace index (the trace length meaning *never*). Policy
predictors are complete caching algorithms that try to imitate the offline
optimum; their cache contents are compared to OPT's to measure error.

Predictors are derived offline from a specific trace, but the consuming
algorithms only ever query them online, one request at a time.
"""

from __future__ import annotations

import math
import random
from collections.abc import Sequence
from dataclasses import dataclass

from augcache.engine import Policy, simulate
from augcache.oracle import OptProfile, furthest_victim
from augcache.trace import NextUseTable, Trace


class ReusePredictor:
    def __init__(self, predictions: Sequence[int], name: str = "reuse"):
        self.predictions = list(predictions)
        self.name = name

    def predict(self, t: int, tag: str) -> int:
        return self.predictions[t]

    def __len__(self) -> int:
        return len(self.predictions)


class PolicyPredictor:
    """Replays its own simulated run and answers victim queries from it.

    ``states[t]`` is the predictor's cache after request ``t``. A query that
    does not match the script (the consumer missed where the predictor hit,
    or the scripted victim is no longer in the consumer's cache) falls back
    to Belady's rule over the consumer's cache.
    """

    def __init__(self, trace: Trace, k: int, next_use: NextUseTable, victims, states, misses, name="policy"):
        self.trace = trace
        self.k = k
        self.next_use = next_use
        self.victims: list[str | None] = victims
        self.states: list[frozenset[str]] = states
        self.name = name
        self.misses = misses
        self.off_script = 0

    def predict_victim(self, t: int, tag: str, cache) -> str:
        victim = self.victims[t]
        if victim is not None and victim in cache:
            return victim
        self.off_script += 1
        return self._belady_fallback(t, cache)

    def _belady_fallback(self, t, cache):
        # next request of each cached tag strictly after t
        next_of = {}
        trace = self.trace
        for tag in cache:
            nxt = len(trace)
            for u in range(t + 1, len(trace)):
                if trace[u] == tag:
                    nxt = u
                    break
            next_of[tag] = nxt
        return furthest_victim(cache, next_of)


def perfect_reuse(next_use: NextUseTable) -> ReusePredictor:
    return ReusePredictor(next_use.next, "perfect-reuse")


def noisy_reuse(next_use: NextUseTable, sigma: float, seed: int = 0) -> ReusePredictor:
    """Log-normal multiplicative noise on the true reuse distance.

    Never-reused requests stay *never*; predictions past the end of the trace
    are capped to *never*.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    rng = random.Random(seed)
    L = len(next_use)
    preds = []
    for t, nxt in enumerate(next_use):
        g = rng.gauss(0.0, 1.0)
        if nxt >= L:
            preds.append(L)
            continue
        d = nxt - t
        noisy = max(1, round(d * math.exp(sigma * g)))
        preds.append(min(t + noisy, L))
    return ReusePredictor(preds, f"noisy-reuse:{sigma:g}")


def adversarial_reuse(next_use: NextUseTable, L: int | None = None) -> ReusePredictor:
    """Order-reversing predictions: the soonest reuse is predicted furthest."""
    if L is None:
        L = len(next_use)
    preds = []
    for t, nxt in enumerate(next_use):
        if nxt >= L:
            preds.append(t + 1)
        else:
            preds.append(2 * L - min(nxt, 2 * L - t - 1))
    return ReusePredictor(preds, "adv-reuse")


class _ScriptedPolicy(Policy):
    def __init__(self, victims):
        self.victims = victims

    def step(self, t, tag, cache, is_full):
        if tag in cache or not is_full:
            return None
        return self.victims[t]


class _NoisyBelady(Policy):
    """Belady's rule with probability ``p``, uniform random eviction otherwise."""

    def __init__(self, next_use: NextUseTable, p: float, seed: int):
        self.next_use = next_use
        self.p = p
        self.rng = random.Random(seed)
        self.next_of: dict[str, int] = {}

    def step(self, t, tag, cache, is_full):
        victim = None
        if is_full and tag not in cache:
            if self.rng.random() < self.p:
                victim = furthest_victim(cache, self.next_of)
            else:
                victim = self.rng.choice(sorted(cache))
        self.next_of[tag] = self.next_use[t]
        return victim


class _BeladyOnPredictions(Policy):
    def __init__(self, predictor: ReusePredictor):
        self.predictor = predictor
        self.pred_of: dict[str, int] = {}

    def step(self, t, tag, cache, is_full):
        victim = None
        if is_full and tag not in cache:
            victim = furthest_victim(cache, self.pred_of)
        self.pred_of[tag] = self.predictor.predict(t, tag)
        return victim


def _from_run(policy: Policy, opt: OptProfile, next_use: NextUseTable, name: str) -> PolicyPredictor:
    result = simulate(policy, opt.trace, opt.k, record_states=True)
    victims = [d.victim for d in result.decisions]
    return PolicyPredictor(opt.trace, opt.k, next_use, victims, result.cache_states, result.misses, name)


def perfect_policy(opt: OptProfile) -> PolicyPredictor:
    victims = [d.victim for d in opt.result.decisions]
    return _from_run(_ScriptedPolicy(victims), opt, opt.next_use, "perfect-policy")


def noisy_policy(opt: OptProfile, next_use: NextUseTable, p: float, seed: int = 0) -> PolicyPredictor:
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    return _from_run(_NoisyBelady(next_use, p, seed), opt, next_use, f"noisy-policy:{p:g}")


def policy_from_reuse(opt: OptProfile, predictor: ReusePredictor, name: str | None = None) -> PolicyPredictor:
    """Turn reuse predictions into policy predictions by applying Belady's rule."""
    return _from_run(_BeladyOnPredictions(predictor), opt, opt.next_use, name or f"policy({predictor.name})")


def adversarial_policy(opt: OptProfile) -> PolicyPredictor:
    return policy_from_reuse(opt, adversarial_reuse(opt.next_use), "adv-policy")


@dataclass
class ErrorAccumulator:
    eta_reuse: int = 0
    eta_cache: int = 0

    def add_reuse(self, predicted: int, actual: int) -> None:
        self.eta_reuse += abs(predicted - actual)

    def add_cache(self, predictor_state, opt_state) -> None:
        self.eta_cache += len(predictor_state ^ opt_state)


def eta_reuse(trace: Sequence[str], predictor: ReusePredictor, next_use: NextUseTable) -> int:
    """Total L1 error of reuse predictions; *never* counts as the trace length."""
    acc = ErrorAccumulator()
    for t, tag in enumerate(trace):
        acc.add_reuse(predictor.predict(t, tag), next_use[t])
    return acc.eta_reuse


def eta_cache(predictor_states: Sequence, opt_states: Sequence) -> int:
    """Symmetric difference between predictor and OPT caches, summed over time."""
    if len(predictor_states) != len(opt_states):
        raise ValueError(
            f"state sequences differ in length ({len(predictor_states)} vs {len(opt_states)})"
        )
    acc = ErrorAccumulator()
    for a, b in zip(predictor_states, opt_states):
        acc.add_cache(frozenset(a), frozenset(b))
    return acc.eta_cache
