"""Learning-augmented eviction policies that consume predictions directly.

The chain-tracking algorithms share one piece of machinery: a miss for a tag
that was evicted earlier (in the current phase for the marking variants,
ever for LNonMarker) extends the eviction chain that evicted it; any other
miss opens a new chain. They differ only in how long a chain keeps trusting
the predictor.

Argmax ties always go to the lexicographically smallest tag, matching
:func:`augcache.oracle.furthest_victim`.
"""

from __future__ import annotations

import random

from augcache.engine import Policy, PolicyError
from augcache.oracle import furthest_victim
from augcache.predictors import PolicyPredictor, ReusePredictor


def harmonic(k: int) -> float:
    return sum(1.0 / i for i in range(1, k + 1))


class ChainLedger:
    def __init__(self):
        self.chain_of: dict[str, int] = {}
        self.length: dict[int, int] = {}
        self._next_id = 0

    def blame(self, tag: str) -> tuple[int, int]:
        """Attribute a miss for ``tag``; returns (chain id, its new length)."""
        chain = self.chain_of.pop(tag, None)
        if chain is None:
            chain = self._next_id
            self._next_id += 1
            self.length[chain] = 1
        else:
            self.length[chain] += 1
        return chain, self.length[chain]

    def record(self, victim: str, chain: int) -> None:
        self.chain_of[victim] = chain

    def clear(self) -> None:
        self.chain_of.clear()
        self.length.clear()


class _ChainMarker(Policy):
    """Marker phases plus per-phase eviction chains; subclasses pick ``trusts``."""

    def __init__(self, predictor: ReusePredictor, seed: int = 0):
        self.predictor = predictor
        self.rng = random.Random(seed)
        self.marks: set[str] = set()
        self.pred_of: dict[str, int] = {}
        self.ledger = ChainLedger()
        self.phase = 0
        self.trusted = 0
        self.untrusted = 0
        self._hk: float | None = None

    def trusts(self, length: int) -> bool:
        raise NotImplementedError

    def step(self, t, tag, cache, is_full):
        victim = None
        if is_full and tag not in cache:
            if self._hk is None:
                self._hk = harmonic(len(cache))
            unmarked = cache - self.marks
            if not unmarked:
                self.phase += 1
                self.marks.clear()
                self.ledger.clear()
                unmarked = cache
            chain, length = self.ledger.blame(tag)
            if self.trusts(length):
                self.trusted += 1
                victim = furthest_victim(unmarked, self.pred_of)
            else:
                self.untrusted += 1
                victim = self.rng.choice(sorted(unmarked))
            self.ledger.record(victim, chain)
        self.marks.add(tag)
        self.pred_of[tag] = self.predictor.predict(t, tag)
        return victim


class PredictiveMarker(_ChainMarker):
    """Follows predictions while the chain is no longer than H_k."""

    name = "predictive-marker"

    def trusts(self, length):
        return length <= self._hk


class LMarker(_ChainMarker):
    """Follows predictions only on the chain-opening eviction."""

    name = "lmarker"

    def trusts(self, length):
        return length == 1


class LNonMarker(Policy):
    """Chain-tracking without phases: trust with probability 1/length.

    Not robust on its own; meant to run inside a combiner with Marker.
    """

    name = "lnonmarker"

    def __init__(self, predictor: ReusePredictor, seed: int = 0):
        self.predictor = predictor
        self.rng = random.Random(seed)
        self.pred_of: dict[str, int] = {}
        self.ledger = ChainLedger()

    def step(self, t, tag, cache, is_full):
        victim = None
        if is_full and tag not in cache:
            chain, length = self.ledger.blame(tag)
            if self.rng.random() < 1.0 / length:
                victim = furthest_victim(cache, self.pred_of)
            else:
                victim = self.rng.choice(sorted(cache))
            self.ledger.record(victim, chain)
        self.pred_of[tag] = self.predictor.predict(t, tag)
        return victim


class BlindOracle(Policy):
    """Belady's rule applied to the predicted next arrivals."""

    name = "blind-oracle"

    def __init__(self, predictor: ReusePredictor):
        self.predictor = predictor
        self.pred_of: dict[str, int] = {}

    def step(self, t, tag, cache, is_full):
        victim = None
        if is_full and tag not in cache:
            victim = furthest_victim(cache, self.pred_of)
        self.pred_of[tag] = self.predictor.predict(t, tag)
        return victim


class FollowThePrediction(Policy):
    """Evicts whatever the policy predictor says; the consistent half of RobustFtP."""

    name = "ftp"

    def __init__(self, predictor: PolicyPredictor):
        self.predictor = predictor

    def step(self, t, tag, cache, is_full):
        if tag in cache or not is_full:
            return None
        victim = self.predictor.predict_victim(t, tag, cache)
        if victim not in cache:
            raise PolicyError(self.name, t, f"predictor proposed uncached victim {victim!r}")
        return victim


def make_predictive_marker(predictor: ReusePredictor, seed: int = 0) -> PredictiveMarker:
    return PredictiveMarker(predictor, seed)


def make_lmarker(predictor: ReusePredictor, seed: int = 0) -> LMarker:
    return LMarker(predictor, seed)


def make_lnonmarker(predictor: ReusePredictor, seed: int = 0) -> LNonMarker:
    return LNonMarker(predictor, seed)


def make_blind_oracle(predictor: ReusePredictor) -> BlindOracle:
    return BlindOracle(predictor)


def make_ftp(predictor: PolicyPredictor) -> FollowThePrediction:
    return FollowThePrediction(predictor)
