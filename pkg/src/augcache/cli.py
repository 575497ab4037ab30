"""Command line entry point: ``augcache {run,gen,report}``."""

from __future__ import annotations

import argparse
import logging
import sys

from augcache.bench import (
    ConfigError,
    ExperimentConfig,
    ReportError,
    TraceSource,
    emit_follow_logs,
    emit_results,
    report,
    run_experiment,
)
from augcache.engine import PolicyError
from augcache.metrics import ConsistencyError
from augcache.trace import TraceParseError, write_trace
from augcache.workloads import Segment, gen_phased, gen_scan_loop, gen_zipf

EXIT_CONFIG = 2
EXIT_PARSE = 3
EXIT_INTERNAL = 4

log = logging.getLogger("augcache")


def _split_list(value: str | None) -> list[str]:
    if not value:
        return []
    return [v.strip() for v in value.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="augcache", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment matrix")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--trace", action="append", help="trace file (repeatable)")
    src.add_argument("--gen", action="append", help="generator spec, e.g. zipf:5000:64:1.0 (repeatable)")
    run.add_argument("--sets", default="all", help="'all', comma-separated ids, or random:N")
    run.add_argument("--split", default="all", choices=["all", "train", "valid", "test"])
    run.add_argument("--cache-size", type=int, default=16)
    run.add_argument("--algo", required=True, help="comma-separated algorithm list")
    run.add_argument("--predictor", default="", help="comma-separated predictor specs")
    run.add_argument("--combiner", default="", help="comma-separated: det:<gamma>, rand:<eps>, none")
    run.add_argument("--fallback", default="marker", choices=["marker", "lru"])
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--repeats", type=int, default=1)
    run.add_argument("--out", required=True)
    run.add_argument("--format", default="csv", choices=["csv", "jsonl"])
    run.add_argument("--follow-logs", help="also write combiner follow logs (jsonl) here")

    gen = sub.add_parser("gen", help="write a synthetic trace file")
    gen.add_argument("--kind", required=True, choices=["zipf", "scanloop", "phased"])
    gen.add_argument("--len", type=int, required=True, dest="length")
    gen.add_argument("--alphabet", type=int, default=64)
    gen.add_argument("--exponent", type=float, default=1.0)
    gen.add_argument("--loop", type=int, default=17, help="loop length for scanloop")
    gen.add_argument("--segments", type=int, default=2, help="segment count for phased")
    gen.add_argument("--num-sets", type=int, default=1, help="independent sets to write")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)

    rep = sub.add_parser("report", help="summarise a results file")
    rep.add_argument("--in", required=True, dest="inp")
    rep.add_argument("--mode", default="table", choices=["table", "plotdata"])
    rep.add_argument("--out", required=True)
    rep.add_argument("--follow-logs", help="follow-log jsonl written by 'run'")
    return parser


def _cmd_run(args) -> int:
    if args.trace:
        sources = [TraceSource(path=p) for p in args.trace]
    else:
        sources = [TraceSource(gen=g) for g in args.gen]
    config = ExperimentConfig(
        sources=sources,
        algorithms=_split_list(args.algo),
        predictors=_split_list(args.predictor),
        combiners=_split_list(args.combiner),
        k=args.cache_size,
        sets=args.sets,
        split=args.split,
        fallback=args.fallback,
        seed=args.seed,
        repeats=args.repeats,
        keep_follow_logs=bool(args.follow_logs),
    )
    results = run_experiment(config)
    emit_results(results, args.out, args.format)
    if args.follow_logs:
        emit_follow_logs(results, args.follow_logs)
    log.info("wrote %d rows to %s", len(results), args.out)
    return 0


def _cmd_gen(args) -> int:
    traces = {}
    for s in range(args.num_sets):
        seed = args.seed + s
        if args.kind == "zipf":
            t = gen_zipf(args.length, args.alphabet, args.exponent, seed)
        elif args.kind == "scanloop":
            t = gen_scan_loop(args.length, args.loop, seed)
        else:
            n = max(1, args.segments)
            lengths = [args.length // n + (1 if i < args.length % n else 0) for i in range(n)]
            t = gen_phased([Segment("zipf", m, args.alphabet, args.exponent) for m in lengths], seed)
        traces[s] = t
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        write_trace(fh, traces)
    return 0


def _cmd_report(args) -> int:
    written = report(args.inp, args.mode, args.out, args.follow_logs)
    if args.mode == "table":
        sys.stdout.write(written[0].read_text(encoding="utf-8"))
    else:
        for path in written:
            log.info("wrote %s", path)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    handlers = {"run": _cmd_run, "gen": _cmd_gen, "report": _cmd_report}
    try:
        return handlers[args.command](args)
    except TraceParseError as exc:
        print(f"augcache: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ConsistencyError, PolicyError) as exc:
        print(f"augcache: internal consistency violation: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (ConfigError, ReportError, ValueError, OSError) as exc:
        print(f"augcache: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
