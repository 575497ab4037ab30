"""Request traces, the on-disk trace format, and next-use indexing.

A trace file is UTF-8 text with one ``set_id,tag`` request per line. Lines
starting with ``#`` are comments. Each cache set is an independent instance
of the caching problem, so parsing partitions the file into one
:class:`Trace` per set id.
"""

from __future__ import annotations

import math
import re
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from typing import TextIO

TAG_RE = re.compile(r"[A-Za-z0-9_]+\Z")
SET_ID_RE = re.compile(r"[0-9]+\Z")


class TraceParseError(ValueError):
    def __init__(self, lineno: int, message: str, source: str | None = None):
        self.lineno = lineno
        self.source = source
        where = f"{source}:{lineno}" if source else f"line {lineno}"
        super().__init__(f"{where}: {message}")


class DegenerateSliceError(ValueError):
    pass


@dataclass(frozen=True)
class Trace(Sequence):
    """Immutable, ordered sequence of requested tags for one cache set."""

    items: tuple[str, ...]
    name: str = field(default="trace", compare=False)

    def __post_init__(self):
        if not isinstance(self.items, tuple):
            object.__setattr__(self, "items", tuple(self.items))

    @classmethod
    def of(cls, items: Iterable[str], name: str = "trace") -> "Trace":
        items = tuple(items)
        for tag in items:
            if not isinstance(tag, str) or not TAG_RE.match(tag):
                raise ValueError(f"illegal tag {tag!r}")
        return cls(items, name)

    def __len__(self) -> int:
        return len(self.items)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return Trace(self.items[index], self.name)
        return self.items[index]

    def __iter__(self) -> Iterator[str]:
        return iter(self.items)

    def distinct(self) -> int:
        return len(set(self.items))


@dataclass(frozen=True)
class CacheConfig:
    k: int = 16

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"cache size must be >= 1, got {self.k}")


@dataclass(frozen=True)
class NextUseTable(Sequence):
    """``next[t]`` is the index of the next request for ``items[t]``.

    The "never requested again" sentinel is the trace length, which is
    greater than every genuine index.
    """

    next: tuple[int, ...]

    @property
    def never(self) -> int:
        return len(self.next)

    def is_never(self, t: int) -> bool:
        return self.next[t] >= len(self.next)

    def __len__(self) -> int:
        return len(self.next)

    def __getitem__(self, t):
        return self.next[t]

    def __iter__(self) -> Iterator[int]:
        return iter(self.next)


def compute_next_use(trace: Sequence[str]) -> NextUseTable:
    n = len(trace)
    nxt = [n] * n
    seen: dict[str, int] = {}
    for t in range(n - 1, -1, -1):
        tag = trace[t]
        nxt[t] = seen.get(tag, n)
        seen[tag] = t
    return NextUseTable(tuple(nxt))


def parse_trace(
    stream: TextIO | Iterable[str],
    sampled_sets: Iterable[int] | None = None,
    source: str | None = None,
) -> dict[int, Trace]:
    """Partition a trace file into per-set traces, preserving request order.

    If ``sampled_sets`` is given only those set ids are kept.
    """
    keep = None
    if sampled_sets is not None:
        keep = set(sampled_sets)
        if not keep:
            raise ValueError("sampled_sets must be non-empty")
    per_set: dict[int, list[str]] = {}
    for lineno, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise TraceParseError(lineno, f"expected 2 columns, got {len(parts)}", source)
        set_str, tag = parts[0].strip(), parts[1].strip()
        if not SET_ID_RE.match(set_str):
            raise TraceParseError(lineno, f"non-numeric set id {set_str!r}", source)
        if not TAG_RE.match(tag):
            raise TraceParseError(lineno, f"illegal tag {tag!r}", source)
        set_id = int(set_str)
        if keep is not None and set_id not in keep:
            continue
        per_set.setdefault(set_id, []).append(tag)
    base = source or "trace"
    return {s: Trace(tuple(tags), f"{base}#{s}") for s, tags in sorted(per_set.items())}


def write_trace(stream: TextIO, traces: dict[int, Trace] | Trace, set_id: int = 0) -> None:
    """Write traces in the canonical format; a bare Trace goes to ``set_id``."""
    if isinstance(traces, Trace):
        traces = {set_id: traces}
    for s, trace in sorted(traces.items()):
        for tag in trace:
            stream.write(f"{s},{tag}\n")


def slice_trace(
    trace: Trace, fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)
) -> tuple[Trace, Trace, Trace]:
    """Split into train/valid/test slices with floor-rounded boundaries."""
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise ValueError(f"fractions must be three positive numbers, got {fractions}")
    if not math.isclose(sum(fractions), 1.0, abs_tol=1e-9):
        raise ValueError(f"fractions must sum to 1, got {sum(fractions)}")
    n = len(trace)
    if n < 3:
        raise DegenerateSliceError(f"trace of length {n} cannot be split in three")
    b1 = math.floor(n * fractions[0] + 1e-9)
    b2 = math.floor(n * (fractions[0] + fractions[1]) + 1e-9)
    parts = (trace[:b1], trace[b1:b2], trace[b2:])
    if any(len(p) == 0 for p in parts):
        sizes = tuple(len(p) for p in parts)
        raise DegenerateSliceError(f"split of length {n} gives an empty slice {sizes}")
    return parts
