"""Reported quantities: hit rate, competitive ratios, prediction usage, summaries."""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import asdict, dataclass, field, fields

from augcache.engine import SimulationResult


class MetricUndefined(ValueError):
    pass


class ConsistencyError(RuntimeError):
    """A result contradicts OPT's minimality or another hard invariant."""


@dataclass
class RunResult:
    trace: str
    set: int
    algorithm: str
    predictor: str
    seed: int
    k: int
    requests: int
    misses: int
    opt_cost: int
    hit_rate: float
    cr: float
    lru_norm: float
    eta_reuse: float
    eta_cache: float
    usage_jaccard: float
    switches: int
    follow_log: list[str] | None = field(default=None, repr=False, compare=False)

    def sort_key(self):
        return (self.trace, self.set, self.algorithm, self.predictor, self.seed)

    def row(self) -> dict:
        d = asdict(self)
        d.pop("follow_log")
        return d


CSV_FIELDS = [f.name for f in fields(RunResult) if f.name != "follow_log"]


def hit_rate(result: SimulationResult) -> float:
    n = result.requests
    if n == 0:
        raise MetricUndefined("hit rate of an empty trace")
    return (n - result.misses) / n


def competitive_ratio(misses: int, opt_cost: int) -> float:
    if misses < opt_cost:
        raise ConsistencyError(f"{misses} misses is below the optimum {opt_cost}")
    if opt_cost == 0:
        if misses == 0:
            return 1.0
        raise MetricUndefined("competitive ratio with a zero-cost optimum")
    return misses / opt_cost


def lru_normalized(cr_alg: float, cr_lru: float) -> float:
    """0 means optimal, 1 means as good as LRU."""
    if cr_lru <= 1.0:
        raise MetricUndefined("LRU is optimal on this input; normalisation not applicable")
    return (cr_alg - 1.0) / (cr_lru - 1.0)


def jaccard(a, b) -> float:
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def prediction_usage(alg_states: Sequence, predictor_states: Sequence) -> float:
    """Time-averaged Jaccard similarity of two cache-state sequences."""
    if len(alg_states) != len(predictor_states):
        raise ValueError(
            f"state sequences differ in length ({len(alg_states)} vs {len(predictor_states)})"
        )
    if not alg_states:
        raise MetricUndefined("prediction usage over an empty run")
    total = 0.0
    for a, p in zip(alg_states, predictor_states):
        total += jaccard(frozenset(a), frozenset(p))
    return total / len(alg_states)


SUMMARY_METRICS = ("misses", "hit_rate", "cr", "lru_norm", "eta_reuse", "eta_cache", "usage_jaccard", "switches")


def _nanstats(values: list[float]) -> tuple[float, float, float]:
    vals = [v for v in values if not (isinstance(v, float) and math.isnan(v))]
    if not vals:
        return (math.nan, math.nan, math.nan)
    return (math.fsum(vals) / len(vals), min(vals), max(vals))


def aggregate(results: Iterable[RunResult], keys: Sequence[str] = ("algorithm",)) -> list[dict]:
    """Mean/min/max of every metric per group, ordered by group key."""
    results = list(results)
    if not results:
        raise ValueError("nothing to aggregate")
    groups: dict[tuple, list[RunResult]] = {}
    for r in results:
        groups.setdefault(tuple(getattr(r, key) for key in keys), []).append(r)
    rows = []
    for group_key in sorted(groups):
        members = groups[group_key]
        row = dict(zip(keys, group_key))
        row["n"] = len(members)
        for metric in SUMMARY_METRICS:
            mean, lo, hi = _nanstats([getattr(m, metric) for m in members])
            row[f"{metric}_mean"] = mean
            row[f"{metric}_min"] = lo
            row[f"{metric}_max"] = hi
        rows.append(row)
    return rows
