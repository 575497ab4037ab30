"""Trace-driven lab for classical and learning-augmented cache eviction."""

from augcache.trace import (
    CacheConfig,
    NextUseTable,
    Trace,
    TraceParseError,
    compute_next_use,
    parse_trace,
    slice_trace,
)
from augcache.engine import Decision, Policy, PolicyError, SimulationResult, simulate

__all__ = [
    "CacheConfig",
    "Decision",
    "NextUseTable",
    "Policy",
    "PolicyError",
    "SimulationResult",
    "Trace",
    "TraceParseError",
    "compute_next_use",
    "parse_trace",
    "simulate",
    "slice_trace",
]

__version__ = "0.1.0"
