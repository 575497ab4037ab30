"""Experiment matrix execution, results persistence and reports."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import random
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from augcache import augmented, classical, combiners, predictors
from augcache.combiners import DEFAULT_EPSILON, DEFAULT_GAMMA
from augcache.engine import simulate
from augcache.metrics import (
    CSV_FIELDS,
    ConsistencyError,
    MetricUndefined,
    RunResult,
    competitive_ratio,
    hit_rate,
    lru_normalized,
    prediction_usage,
)
from augcache.oracle import OptProfile, belady
from augcache.trace import Trace, compute_next_use, parse_trace, slice_trace
from augcache.workloads import parse_gen_spec


class ConfigError(ValueError):
    pass


class ReportError(ValueError):
    pass


CLASSICAL = ("opt", "lru", "random", "marker")
REUSE_ALGOS = ("predictive-marker", "lmarker", "lnonmarker", "blind-oracle")
POLICY_ALGOS = ("ftp",)
COMBINABLE = ("lnonmarker", "blind-oracle", "ftp")
ALGORITHMS = CLASSICAL + REUSE_ALGOS + POLICY_ALGOS

REUSE_PREDICTORS = ("perfect-reuse", "noisy-reuse", "adv-reuse")
POLICY_PREDICTORS = ("perfect-policy", "noisy-policy", "adv-policy")
NO_PREDICTOR = "-"


def predictor_setup(spec: str) -> str:
    name, _, arg = spec.partition(":")
    if name in ("noisy-reuse", "noisy-policy"):
        try:
            value = float(arg)
        except ValueError:
            raise ConfigError(f"predictor {spec!r} needs a numeric parameter") from None
        if name == "noisy-reuse" and value < 0:
            raise ConfigError(f"noise scale must be >= 0 in {spec!r}")
        if name == "noisy-policy" and not 0 <= value <= 1:
            raise ConfigError(f"fidelity must lie in [0, 1] in {spec!r}")
    elif arg:
        raise ConfigError(f"predictor {name!r} takes no parameter")
    if name in REUSE_PREDICTORS:
        return "reuse"
    if name in POLICY_PREDICTORS:
        return "policy"
    raise ConfigError(f"unknown predictor {spec!r}")


def parse_combiner(spec: str) -> tuple[str, float] | None:
    if spec == "none":
        return None
    kind, _, arg = spec.partition(":")
    if kind not in ("det", "rand"):
        raise ConfigError(f"unknown combiner {spec!r}")
    try:
        value = float(arg) if arg else (DEFAULT_GAMMA if kind == "det" else DEFAULT_EPSILON)
    except ValueError:
        raise ConfigError(f"combiner {spec!r} needs a numeric parameter") from None
    if kind == "det" and not value > 1:
        raise ConfigError("deterministic combiner needs gamma > 1")
    if kind == "rand" and not 0 < value < 1:
        raise ConfigError("randomized combiner needs 0 < epsilon < 1")
    return kind, value


@dataclass
class TraceSource:
    """A trace file (with optional set sampling) or a generator spec."""

    path: str | None = None
    gen: str | None = None

    @property
    def id(self) -> str:
        if self.path is not None:
            return Path(self.path).stem
        return self.gen


@dataclass
class ExperimentConfig:
    sources: list[TraceSource]
    algorithms: list[str]
    predictors: list[str] = field(default_factory=list)
    combiners: list[str] = field(default_factory=list)
    k: int = 16
    sets: str = "all"
    split: str = "all"
    fallback: str = "marker"
    seed: int = 0
    repeats: int = 1
    keep_follow_logs: bool = False

    def validate(self) -> None:
        if self.k < 1:
            raise ConfigError("cache size must be >= 1")
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if not self.sources:
            raise ConfigError("no trace source given")
        if self.fallback not in ("marker", "lru"):
            raise ConfigError(f"unknown fallback {self.fallback!r}")
        if self.split not in ("all", "train", "valid", "test"):
            raise ConfigError(f"unknown split {self.split!r}")
        for algo in self.algorithms:
            if algo not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {algo!r}")
        setups = {p: predictor_setup(p) for p in self.predictors}
        for c in self.combiners:
            parse_combiner(c)
        for algo in self.algorithms:
            if algo in REUSE_ALGOS and "reuse" not in setups.values():
                raise ConfigError(f"{algo} needs a reuse-distance predictor")
            if algo in POLICY_ALGOS and "policy" not in setups.values():
                raise ConfigError(f"{algo} needs a policy predictor")
        needs = {"reuse": REUSE_ALGOS, "policy": POLICY_ALGOS}
        for p, setup in setups.items():
            if not any(a in needs[setup] for a in self.algorithms):
                users = ", ".join(needs[setup])
                raise ConfigError(f"predictor {p!r} has no compatible algorithm (needs one of {users})")

    def matrix(self) -> list[tuple[str, str]]:
        """(algorithm label, predictor) pairs; OPT and LRU are always included."""
        algos = list(dict.fromkeys(["opt", "lru", *self.algorithms]))
        combs = self.combiners or ["none"]
        pairs = []
        for algo in algos:
            if algo in CLASSICAL:
                pairs.append((algo, NO_PREDICTOR))
                continue
            setup = "reuse" if algo in REUSE_ALGOS else "policy"
            for p in self.predictors:
                if predictor_setup(p) != setup:
                    continue
                if algo in COMBINABLE:
                    for c in combs:
                        label = algo if c == "none" else f"{algo}+{c}"
                        pairs.append((label, p))
                else:
                    pairs.append((algo, p))
        return pairs


def derive_seed(*parts) -> int:
    digest = hashlib.blake2b(repr(parts).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


def _select_sets(traces: dict[int, Trace], sets: str, seed: int) -> dict[int, Trace]:
    if sets == "all":
        return traces
    if sets.startswith("random:"):
        n = int(sets.split(":", 1)[1])
        ids = sorted(traces)
        if n > len(ids):
            raise ConfigError(f"cannot sample {n} of {len(ids)} sets")
        chosen = sorted(random.Random(seed).sample(ids, n))
        return {s: traces[s] for s in chosen}
    wanted = [int(x) for x in sets.split(",") if x.strip()]
    missing = [s for s in wanted if s not in traces]
    if missing:
        raise ConfigError(f"sets not present in trace: {missing}")
    return {s: traces[s] for s in wanted}


def load_sources(config: ExperimentConfig) -> list[tuple[str, int, Trace]]:
    """Resolve every source into (trace id, set id, trace) triples."""
    out = []
    for source in config.sources:
        if source.path is not None:
            keep = None
            if config.sets not in ("all",) and not config.sets.startswith("random:"):
                keep = [int(x) for x in config.sets.split(",") if x.strip()]
            with open(source.path, encoding="utf-8") as fh:
                traces = parse_trace(fh, keep, source=source.path)
            traces = _select_sets(traces, config.sets, config.seed)
        else:
            try:
                traces = {0: parse_gen_spec(source.gen, derive_seed(config.seed, source.gen))}
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        for set_id, trace in sorted(traces.items()):
            if config.split != "all":
                train, valid, test = slice_trace(trace)
                trace = {"train": train, "valid": valid, "test": test}[config.split]
            out.append((source.id, set_id, trace))
    return out


def build_reuse_predictor(spec: str, next_use, seed: int) -> predictors.ReusePredictor:
    name, _, arg = spec.partition(":")
    if name == "perfect-reuse":
        return predictors.perfect_reuse(next_use)
    if name == "noisy-reuse":
        return predictors.noisy_reuse(next_use, float(arg), seed)
    if name == "adv-reuse":
        return predictors.adversarial_reuse(next_use)
    raise ConfigError(f"not a reuse predictor: {spec!r}")


def build_policy_predictor(spec: str, opt: OptProfile, seed: int) -> predictors.PolicyPredictor:
    name, _, arg = spec.partition(":")
    if name == "perfect-policy":
        return predictors.perfect_policy(opt)
    if name == "noisy-policy":
        return predictors.noisy_policy(opt, opt.next_use, float(arg), seed)
    if name == "adv-policy":
        return predictors.adversarial_policy(opt)
    raise ConfigError(f"not a policy predictor: {spec!r}")


def build_core(algo: str, predictor, seed: int):
    if algo == "lru":
        return classical.make_lru()
    if algo == "random":
        return classical.make_random(seed)
    if algo == "marker":
        return classical.make_marker(seed)
    if algo == "predictive-marker":
        return augmented.make_predictive_marker(predictor, seed)
    if algo == "lmarker":
        return augmented.make_lmarker(predictor, seed)
    if algo == "lnonmarker":
        return augmented.make_lnonmarker(predictor, seed)
    if algo == "blind-oracle":
        return augmented.make_blind_oracle(predictor)
    if algo == "ftp":
        return augmented.make_ftp(predictor)
    raise ConfigError(f"unknown algorithm {algo!r}")


def build_policy(label: str, predictor, seed: int, fallback: str = "marker"):
    algo, _, comb = label.partition("+")
    core = build_core(algo, predictor, derive_seed(seed, "core"))
    if not comb:
        return core
    kind, value = parse_combiner(comb)
    robust = build_core(fallback, None, derive_seed(seed, "fallback"))
    if kind == "det":
        return combiners.combine_deterministic(core, robust, value)
    return combiners.combine_randomized(core, robust, value, derive_seed(seed, "combiner"))


def run_experiment(config: ExperimentConfig) -> list[RunResult]:
    config.validate()
    pairs = config.matrix()
    results: list[RunResult] = []
    for trace_id, set_id, trace in load_sources(config):
        next_use = compute_next_use(trace)
        opt = belady(trace, config.k, next_use)
        lru_misses = simulate(classical.make_lru(), trace, config.k, record_states=False).misses
        opt_cost = opt.opt_cost
        cr_lru = competitive_ratio(lru_misses, opt_cost)
        for rep in range(config.repeats):
            seed = config.seed + rep
            built: dict[str, object] = {}
            blind_states: dict[str, list] = {}
            for label, pspec in pairs:
                run_seed = derive_seed(seed, trace_id, set_id, label, pspec)
                predictor = None
                eta_r = eta_c = usage = math.nan
                if pspec != NO_PREDICTOR:
                    if pspec not in built:
                        pseed = derive_seed(seed, trace_id, set_id, "predictor", pspec)
                        if predictor_setup(pspec) == "reuse":
                            pred = build_reuse_predictor(pspec, next_use, pseed)
                            blind = simulate(augmented.make_blind_oracle(pred), trace, config.k)
                            blind_states[pspec] = blind.cache_states
                        else:
                            pred = build_policy_predictor(pspec, opt, pseed)
                            blind_states[pspec] = pred.states
                        built[pspec] = pred
                    predictor = built[pspec]
                    if isinstance(predictor, predictors.ReusePredictor):
                        eta_r = float(predictors.eta_reuse(trace, predictor, next_use))
                    else:
                        eta_c = float(predictors.eta_cache(predictor.states, opt.result.cache_states))
                if label == "opt":
                    sim = opt.result
                    switches = 0
                    log = None
                else:
                    policy = build_policy(label, predictor, run_seed, config.fallback)
                    sim = simulate(policy, trace, config.k, record_states=predictor is not None)
                    switches = getattr(policy, "switches", 0)
                    log = sim.aux if config.keep_follow_logs else None
                if predictor is not None and len(trace) > 0:
                    usage = prediction_usage(sim.cache_states, blind_states[pspec])
                cr = competitive_ratio(sim.misses, opt_cost)
                try:
                    norm = lru_normalized(cr, cr_lru)
                except MetricUndefined:
                    norm = math.nan
                hr = hit_rate(sim) if len(trace) else math.nan
                results.append(
                    RunResult(
                        trace=trace_id,
                        set=set_id,
                        algorithm=label,
                        predictor=pspec,
                        seed=seed,
                        k=config.k,
                        requests=len(trace),
                        misses=sim.misses,
                        opt_cost=opt_cost,
                        hit_rate=hr,
                        cr=cr,
                        lru_norm=norm,
                        eta_reuse=eta_r,
                        eta_cache=eta_c,
                        usage_jaccard=usage,
                        switches=switches,
                        follow_log=log,
                    )
                )
    results.sort(key=RunResult.sort_key)
    return results


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _json_value(value):
    if isinstance(value, float):
        if math.isnan(value):
            return None
        return float(f"{value:.6g}")
    return value


def results_csv(results: Sequence[RunResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for r in sorted(results, key=RunResult.sort_key):
        row = r.row()
        writer.writerow([_fmt(row[f]) for f in CSV_FIELDS])
    return buf.getvalue()


def results_jsonl(results: Sequence[RunResult]) -> str:
    lines = []
    for r in sorted(results, key=RunResult.sort_key):
        row = r.row()
        lines.append(json.dumps({f: _json_value(row[f]) for f in CSV_FIELDS}))
    return "".join(line + "\n" for line in lines)


def emit_results(results: Sequence[RunResult], path: str | os.PathLike, format: str = "csv") -> None:
    if format == "csv":
        text = results_csv(results)
    elif format == "jsonl":
        text = results_jsonl(results)
    else:
        raise ConfigError(f"unknown format {format!r}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def emit_follow_logs(results: Sequence[RunResult], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in sorted(results, key=RunResult.sort_key):
            if r.follow_log is None:
                continue
            key = {"trace": r.trace, "set": r.set, "algorithm": r.algorithm, "predictor": r.predictor, "seed": r.seed}
            fh.write(json.dumps({**key, "log": "".join(r.follow_log)}) + "\n")


_INT_FIELDS = {"set", "seed", "k", "requests", "misses", "opt_cost", "switches"}
_STR_FIELDS = {"trace", "algorithm", "predictor"}


def _coerce(name: str, value):
    if name in _STR_FIELDS:
        return str(value)
    if name in _INT_FIELDS:
        return int(value)
    if value is None or value == "":
        return math.nan
    return float(value)


def load_results(path: str | os.PathLike) -> list[RunResult]:
    text = Path(path).read_text(encoding="utf-8")
    rows: list[dict] = []
    if text.startswith("{"):
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
    else:
        reader = csv.DictReader(io.StringIO(text))
        if reader.fieldnames != CSV_FIELDS:
            raise ReportError(f"{path}: unexpected header {reader.fieldnames}")
        rows = list(reader)
    return [RunResult(**{f: _coerce(f, row[f]) for f in CSV_FIELDS}) for row in rows]


def normalized_table(results: Iterable[RunResult]) -> list[dict]:
    """Dataset-level LRU-normalized ratio per (trace, algorithm, predictor).

    Misses and OPT costs are summed over sets and seeds before dividing, so a
    trace with many sets counts as one dataset.
    """
    totals: dict[tuple, list[int]] = {}
    for r in results:
        acc = totals.setdefault((r.trace, r.algorithm, r.predictor), [0, 0])
        acc[0] += r.misses
        acc[1] += r.opt_cost
    traces = sorted({key[0] for key in totals})
    rows = []
    for trace in traces:
        for baseline in ("opt", "lru"):
            if (trace, baseline, NO_PREDICTOR) not in totals:
                raise ReportError(f"trace {trace!r} has no {baseline.upper()} baseline rows")
        lru_m, lru_o = totals[(trace, "lru", NO_PREDICTOR)]
        cr_lru = competitive_ratio(lru_m, lru_o)
        for (t, algo, pred), (m, o) in sorted(totals.items()):
            if t != trace:
                continue
            cr = competitive_ratio(m, o)
            try:
                norm = lru_normalized(cr, cr_lru)
            except MetricUndefined:
                norm = math.nan
            rows.append({"trace": trace, "algorithm": algo, "predictor": pred, "cr": cr, "lru_norm": norm})
    return rows


def format_table(rows: Sequence[dict]) -> str:
    traces = sorted({r["trace"] for r in rows})
    order = {"opt": 0, "lru": 1}
    labels = sorted({(r["algorithm"], r["predictor"]) for r in rows}, key=lambda x: (order.get(x[0], 2), x))
    value = {(r["trace"], r["algorithm"], r["predictor"]): r["lru_norm"] for r in rows}
    names = [a if p == NO_PREDICTOR else f"{a} [{p}]" for a, p in labels]
    width = max([len(n) for n in names] + [9])
    cols = [max(len(t), 8) for t in traces]
    lines = [" " * width + "  " + "  ".join(t.rjust(c) for t, c in zip(traces, cols))]
    for (algo, pred), label in zip(labels, names):
        cells = []
        for t, c in zip(traces, cols):
            v = value.get((t, algo, pred))
            cells.append(("" if v is None else "n/a" if math.isnan(v) else f"{v:.3f}").rjust(c))
        lines.append(label.ljust(width) + "  " + "  ".join(cells))
    return "\n".join(lines) + "\n"


def report(
    results_path: str | os.PathLike,
    mode: str,
    out_dir: str | os.PathLike,
    follow_logs: str | os.PathLike | None = None,
) -> list[Path]:
    """Write a normalized-cost table or plot-data CSVs; returns the files written."""
    results = load_results(results_path)
    rows = normalized_table(results)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if mode == "table":
        path = out / "table.txt"
        path.write_text(format_table(rows), encoding="utf-8")
        written.append(path)
    elif mode == "plotdata":
        path = out / "normalized_cost.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["trace", "algorithm", "predictor", "cr", "lru_norm"])
            for r in rows:
                writer.writerow([r["trace"], r["algorithm"], r["predictor"], _fmt(r["cr"]), _fmt(r["lru_norm"])])
        written.append(path)
        if follow_logs is not None:
            written.extend(_write_follow_plotdata(follow_logs, out))
    else:
        raise ConfigError(f"unknown report mode {mode!r}")
    return written


def _write_follow_plotdata(follow_logs, out: Path) -> list[Path]:
    written = []
    index_path = out / "follow_index.csv"
    with open(follow_logs, encoding="utf-8") as src, open(index_path, "w", encoding="utf-8", newline="") as idx:
        index = csv.writer(idx, lineterminator="\n")
        index.writerow(["file", "trace", "set", "algorithm", "predictor", "seed", "steps", "switches"])
        for i, line in enumerate(l for l in src if l.strip()):
            entry = json.loads(line)
            log = entry["log"]
            name = f"follow_{i:04d}.csv"
            with open(out / name, "w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["step", "side"])
                writer.writerows(enumerate(log))
            switches = sum(1 for a, b in zip(log, log[1:]) if a != b)
            index.writerow([name, entry["trace"], entry["set"], entry["algorithm"], entry["predictor"], entry["seed"], len(log), switches])
            written.append(out / name)
    written.append(index_path)
    return written


__all__ = [
    "ConfigError",
    "ConsistencyError",
    "ExperimentConfig",
    "ReportError",
    "TraceSource",
    "emit_follow_logs",
    "emit_results",
    "load_results",
    "normalized_table",
    "report",
    "run_experiment",
]
