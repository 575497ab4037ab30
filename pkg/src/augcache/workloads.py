"""Synthetic request workloads.

All generators are deterministic under their seed. Tags are short tokens
(``z17``, ``x3``); phased workloads prefix each segment's tags so that the
item populations of different segments are disjoint.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from augcache.trace import Trace


def gen_zipf(L: int, alphabet_size: int, exponent: float, seed: int = 0, prefix: str = "z") -> Trace:
    """i.i.d. draws with P(rank r) proportional to r**-exponent."""
    if L < 0 or alphabet_size < 1 or exponent < 0:
        raise ValueError("need L >= 0, alphabet_size >= 1, exponent >= 0")
    rng = np.random.default_rng(seed)
    ranks = np.arange(1, alphabet_size + 1, dtype=float)
    weights = ranks ** -float(exponent)
    draws = rng.choice(alphabet_size, size=L, p=weights / weights.sum())
    return Trace(tuple(f"{prefix}{r + 1}" for r in draws.tolist()), f"zipf-{alphabet_size}-{exponent:g}-{seed}")


def gen_scan_loop(L: int, m: int, seed: int = 0, prefix: str = "x") -> Trace:
    """Cyclic scan over ``m`` items; ``seed`` is accepted for interface symmetry."""
    if L < 0 or m < 1:
        raise ValueError("need L >= 0 and m >= 1")
    return Trace(tuple(f"{prefix}{t % m + 1}" for t in range(L)), f"scanloop-{m}")


@dataclass(frozen=True)
class Segment:
    kind: str
    length: int
    alphabet: int = 64
    exponent: float = 1.0
    m: int = 17


def gen_phased(segments: Sequence[Segment | tuple], seed: int = 0) -> Trace:
    """Concatenate sub-workloads over disjoint item populations.

    A segment is a :class:`Segment` or a ``(kind, length, params)`` tuple with
    ``kind`` in ``{"zipf", "scanloop"}``.
    """
    seeds = np.random.SeedSequence(seed).spawn(len(segments))
    items: list[str] = []
    for i, seg in enumerate(segments):
        if not isinstance(seg, Segment):
            kind, length, params = seg
            seg = Segment(kind, length, **params)
        if seg.length < 0:
            raise ValueError("segment lengths must be >= 0")
        sub_seed = int(seeds[i].generate_state(1)[0])
        if seg.kind == "zipf":
            part = gen_zipf(seg.length, seg.alphabet, seg.exponent, sub_seed, prefix=f"p{i}_z")
        elif seg.kind == "scanloop":
            part = gen_scan_loop(seg.length, seg.m, prefix=f"p{i}_x")
        else:
            raise ValueError(f"unknown segment kind {seg.kind!r}")
        items.extend(part.items)
    return Trace(tuple(items), f"phased-{len(segments)}-{seed}")


def parse_gen_spec(spec: str, seed: int = 0) -> Trace:
    """Build a trace from a CLI generator spec.

    ``zipf:L:alphabet:exponent``, ``scanloop:L:m`` or
    ``phased:L:segments:alphabet:exponent`` (equal-length Zipf segments).
    """
    kind, _, rest = spec.partition(":")
    args = rest.split(":") if rest else []
    try:
        if kind == "zipf" and len(args) == 3:
            trace = gen_zipf(int(args[0]), int(args[1]), float(args[2]), seed)
        elif kind == "scanloop" and len(args) == 2:
            trace = gen_scan_loop(int(args[0]), int(args[1]), seed)
        elif kind == "phased" and len(args) == 4:
            L, n_seg = int(args[0]), int(args[1])
            if n_seg < 1:
                raise ValueError("need at least one segment")
            lengths = [L // n_seg + (1 if i < L % n_seg else 0) for i in range(n_seg)]
            trace = gen_phased(
                [Segment("zipf", n, int(args[2]), float(args[3])) for n in lengths], seed
            )
        else:
            raise ValueError(f"malformed generator spec {spec!r}")
    except (TypeError, ValueError) as exc:
        raise ValueError(f"malformed generator spec {spec!r}: {exc}") from None
    return Trace(trace.items, spec.replace(":", "_"))


def make_corpus(n: int = 200, seed: int = 2021, max_len: int = 20_000, k: int = 16) -> list[Trace]:
    """A mixed corpus sized for desk-scale runs.

    45% Zipf, 40% phased, 15% pure scan loops. Lengths are mostly short with
    one in forty at ``max_len``. Loop lengths and alphabets are drawn above
    ``k`` so that eviction decisions matter.
    """
    rng = np.random.default_rng(seed)
    corpus = []
    for i in range(n):
        long = i % 40 == 39
        L = max_len if long else int(rng.integers(800, min(4000, max_len) + 1))
        slot = i % 20
        kind = "zipf" if slot < 9 else "phased" if slot < 17 else "scanloop"
        sub = int(rng.integers(0, 2**31))
        if kind == "zipf":
            alphabet = int(rng.integers(k + 8, 12 * k))
            s = float(rng.choice([0.6, 0.8, 1.0, 1.2]))
            t = gen_zipf(L, alphabet, s, sub)
        elif kind == "scanloop":
            m = int(rng.integers(k + 1, 3 * k))
            t = gen_scan_loop(L, m)
        else:
            n_seg = int(rng.integers(2, 5))
            lengths = [L // n_seg] * (n_seg - 1) + [L - (L // n_seg) * (n_seg - 1)]
            segs = []
            for length in lengths:
                if rng.random() < 0.3:
                    segs.append(Segment("scanloop", length, m=int(rng.integers(k + 1, 2 * k))))
                else:
                    segs.append(
                        Segment(
                            "zipf",
                            length,
                            alphabet=int(rng.integers(k + 8, 8 * k)),
                            exponent=float(rng.choice([0.6, 0.9, 1.2])),
                        )
                    )
            t = gen_phased(segs, sub)
        corpus.append(Trace(t.items, f"c{i:03d}-{t.name}"))
    return corpus
