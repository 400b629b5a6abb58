"""Command-line entry point: evolve, bench, and replay subcommands.

Exit codes: 0 success, 1 configuration error, 2 runtime error (including
replay checksum mismatches).
"""

from __future__ import annotations

import argparse
import sys

from .bench import AGENT_SWEEP, BENCHMARKS, DEFAULT_BENCH_SEED, DEFAULT_REPLICATES
from .config import ConfigError, parse_config
from .runner import (
    BenchRequest,
    ReplayMismatch,
    load_manifest,
    replay_bench,
    replay_evolve,
    run_bench,
    run_evolve,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse usage problems are config errors
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="sgpvm", description="Event-driven genetic programming engine")
    sub = parser.add_subparsers(dest="command", required=True)

    evolve = sub.add_parser("evolve", help="run a replicated evolution experiment")
    evolve.add_argument("config", help="experiment config file")
    evolve.add_argument("--seed", type=int, help="override the config seed")
    evolve.add_argument("--backend", choices=("lite", "flex"), help="override the backend")
    evolve.add_argument("--out-dir", help="override the output directory")

    bench = sub.add_parser("bench", help="run the microbenchmark suites")
    bench.add_argument("--benchmark", default="all",
                       help=f"one of {', '.join(BENCHMARKS)}, or 'all'")
    bench.add_argument("--backend", choices=("lite", "flex", "both"), default="both")
    bench.add_argument("--agents", default="1,32,1024,32768",
                       help="comma-separated agent counts from the sweep "
                            + str(AGENT_SWEEP))
    bench.add_argument("--replicates", type=int, default=DEFAULT_REPLICATES)
    bench.add_argument("--out", default="bench.csv", help="timings CSV path")
    bench.add_argument("--seed", type=int, default=DEFAULT_BENCH_SEED)
    bench.add_argument("--min-time-ms", type=int, default=100,
                       help="minimum timed region per measurement")

    replay = sub.add_parser("replay", help="verify a prior run from its manifest")
    replay.add_argument("manifest", help="manifest.json from a prior run")
    replay.add_argument("--replicate", type=int, default=0,
                        help="replicate index (evolve manifests)")
    replay.add_argument("--out", help="write the recomputed history CSV here")
    return parser


def _cmd_evolve(args) -> int:
    with open(args.config) as fh:
        cfg = parse_config(fh.read())
    if args.seed is not None:
        cfg.seed = args.seed
    if args.backend is not None:
        cfg.backend = args.backend
    manifest_path = run_evolve(cfg, out_dir=args.out_dir)
    print(f"wrote {manifest_path}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    benchmarks = BENCHMARKS if args.benchmark == "all" else (args.benchmark,)
    for name in benchmarks:
        if name not in BENCHMARKS:
            raise ConfigError(f"unknown benchmark {name!r}; expected one of {BENCHMARKS}")
    backends = ("lite", "flex") if args.backend == "both" else (args.backend,)
    try:
        agent_counts = tuple(int(v) for v in args.agents.split(","))
    except ValueError:
        raise ConfigError(f"bad --agents value {args.agents!r}") from None
    if args.replicates < 1:
        raise ConfigError("--replicates must be >= 1")
    manifest_path = run_bench(
        BenchRequest(
            benchmarks=tuple(benchmarks),
            backends=backends,
            agent_counts=agent_counts,
            replicates=args.replicates,
            seed=args.seed,
            min_time_ns=args.min_time_ms * 1_000_000,
            out=args.out,
        )
    )
    print(f"wrote {args.out} and {manifest_path}")
    return EXIT_OK


def _cmd_replay(args) -> int:
    manifest = load_manifest(args.manifest)
    kind = manifest.get("kind")
    if kind == "evolve":
        blob = replay_evolve(manifest, args.replicate)
        if args.out:
            with open(args.out, "wb") as fh:
                fh.write(blob)
        print(f"replicate {args.replicate}: checksum verified")
    elif kind == "bench":
        fingerprints = replay_bench(manifest)
        print(f"verified {len(fingerprints)} workload fingerprints")
    else:
        raise ConfigError(f"unknown manifest kind {kind!r}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "evolve":
            return _cmd_evolve(args)
        if args.command == "bench":
            return _cmd_bench(args)
        return _cmd_replay(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ReplayMismatch, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
