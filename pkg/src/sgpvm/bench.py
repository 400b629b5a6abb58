"""Microbenchmark harness: five suites, agent-count sweep, CSV emission.

One measurement keeps re-running the workload (every agent's CPU for 100
cycles) until at least 100ms have elapsed, then reports nanoseconds per
agent per 100-cycle pass. The reference backend is labelled "vanilla" in
records and CSV output. Timing runs single-threaded with a warm-up pass;
a fresh, identically seeded agent set is built for every replicate so both
backends execute comparable workloads.
"""

from __future__ import annotations

import csv
import hashlib
import statistics
import time
from dataclasses import dataclass

from . import isa
from .cpu import VirtualCpu
from .program import random_program, serialize
from .rng import Xorshift64Star, mix_seeds
from .tags import ZERO_TAG

BENCHMARKS = ("control", "nop", "arithmetic", "complete", "sans_regulation")
AGENT_SWEEP = (1, 32, 1024, 32768)
PROGRAM_LENGTH = 100
CYCLES_PER_PASS = 100
DEFAULT_REPLICATES = 20
DEFAULT_MIN_TIME_NS = 100_000_000
DEFAULT_BENCH_SEED = 20260810

CSV_HEADER = "Library,Implementation,Wall Nanoseconds,CPU Nanoseconds,num agents"

_IMPLEMENTATION_LABEL = {"lite": "lite", "flex": "vanilla"}
_LABEL_TO_BACKEND = {v: k for k, v in _IMPLEMENTATION_LABEL.items()}


@dataclass(frozen=True)
class BenchRecord:
    library: str
    implementation: str  # "lite" or "vanilla"
    wall_ns: float
    cpu_ns: float
    num_agents: int


@dataclass(frozen=True)
class SpeedupRow:
    library: str
    num_agents: int
    speedup: float  # median(vanilla wall) / median(lite wall)


def _check_args(name: str, backend: str, num_agents: int, replicates: int) -> None:
    if name not in BENCHMARKS:
        raise ValueError(f"unknown benchmark {name!r}; expected one of {BENCHMARKS}")
    if backend not in ("lite", "flex"):
        raise ValueError(f"unknown backend {backend!r}; expected lite or flex")
    if num_agents not in AGENT_SWEEP:
        raise ValueError(f"num_agents must be drawn from the sweep {AGENT_SWEEP}")
    if replicates < 1:
        raise ValueError("replicates must be >= 1")


def _program_set(name: str, backend: str) -> isa.InstructionSetSpec:
    # control times an empty loop; its agents just hold nop programs
    base = isa.resolve_set("nop" if name == "control" else name)
    return isa.flex_dialect(base) if backend == "flex" else base


def build_agents(name: str, backend: str, num_agents: int,
                 base_seed: int = DEFAULT_BENCH_SEED) -> list[VirtualCpu]:
    """Fresh agent set: agent i holds its own random program seeded by (base_seed, i)."""
    spec = _program_set(name, backend)
    agents = []
    for i in range(num_agents):
        prog = random_program(spec, PROGRAM_LENGTH, Xorshift64Star(mix_seeds(base_seed, i)))
        agents.append(VirtualCpu(prog, backend, seed=mix_seeds(base_seed, i, 1)))
    return agents


def _workload_pass(agents: list[VirtualCpu]) -> None:
    for cpu in agents:
        if not cpu.core_count:
            cpu.launch(ZERO_TAG)
        cpu.step(CYCLES_PER_PASS)


def _control_pass(agents: list[VirtualCpu]) -> None:
    for cpu in agents:
        pass


def run_microbenchmark(
    name: str,
    backend: str,
    num_agents: int,
    replicates: int = DEFAULT_REPLICATES,
    base_seed: int = DEFAULT_BENCH_SEED,
    min_time_ns: int = DEFAULT_MIN_TIME_NS,
) -> list[BenchRecord]:
    """One BenchRecord per replicate for a single (benchmark, backend, agents) cell."""
    _check_args(name, backend, num_agents, replicates)
    do_pass = _control_pass if name == "control" else _workload_pass
    label = _IMPLEMENTATION_LABEL[backend]
    records = []
    for _ in range(replicates):
        agents = build_agents(name, backend, num_agents, base_seed)
        do_pass(agents)  # warm-up
        passes = 0
        chunk = 1
        cpu0 = time.process_time_ns()
        wall0 = time.perf_counter_ns()
        while True:
            chunk_start = time.perf_counter_ns()
            for _ in range(chunk):
                do_pass(agents)
            passes += chunk
            now = time.perf_counter_ns()
            wall_elapsed = now - wall0
            if wall_elapsed >= min_time_ns:
                break
            # batch passes between clock reads until a chunk is individually
            # timeable, so the timer call cannot skew cheap workloads
            if now - chunk_start < min_time_ns // 128:
                chunk *= 2
        cpu_elapsed = time.process_time_ns() - cpu0
        denom = passes * num_agents
        records.append(
            BenchRecord(
                name,
                label,
                _quantize(wall_elapsed / denom),
                _quantize(cpu_elapsed / denom),
                num_agents,
            )
        )
    return records


def _quantize(v: float) -> float:
    # records store exactly what the CSV will round-trip
    return float(f"{v:.2f}")


def compute_speedup(records: list[BenchRecord]) -> list[SpeedupRow]:
    """Median vanilla-over-lite wall-time ratio per (benchmark, agent count) cell."""
    cells: dict[tuple[str, int], dict[str, list[float]]] = {}
    for r in records:
        cells.setdefault((r.library, r.num_agents), {}).setdefault(
            r.implementation, []
        ).append(r.wall_ns)
    missing = [
        f"{lib}/{agents} lacks {impl}"
        for (lib, agents), sides in sorted(cells.items())
        for impl in ("vanilla", "lite")
        if impl not in sides
    ]
    if missing:
        raise ValueError("incomplete cells: " + "; ".join(missing))
    return [
        SpeedupRow(lib, agents, statistics.median(sides["vanilla"]) / statistics.median(sides["lite"]))
        for (lib, agents), sides in sorted(cells.items())
    ]


def emit_csv(records: list[BenchRecord], path: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        for r in records:
            writer.writerow(
                [r.library, r.implementation, f"{r.wall_ns:.2f}", f"{r.cpu_ns:.2f}", r.num_agents]
            )


def parse_csv(path: str) -> list[BenchRecord]:
    with open(path, newline="") as fh:
        header = fh.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header!r}")
        records = []
        for row in csv.reader(fh):
            lib, impl, wall, cpu_ns, agents = row
            if impl not in _LABEL_TO_BACKEND:
                raise ValueError(f"unknown implementation label {impl!r}")
            records.append(BenchRecord(lib, impl, float(wall), float(cpu_ns), int(agents)))
    return records


def emit_speedup_csv(rows: list[SpeedupRow], path: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("Library,num agents,Speedup\n")
        for row in rows:
            fh.write(f"{row.library},{row.num_agents},{row.speedup:.4f}\n")


def workload_fingerprint(
    name: str,
    backend: str,
    num_agents: int,
    base_seed: int = DEFAULT_BENCH_SEED,
) -> str:
    """Digest of the workload's semantics: genomes plus the register files
    after one 100-cycle pass. Timings vary run to run; this must not."""
    _check_args(name, backend, num_agents, 1)
    agents = build_agents(name, backend, num_agents, base_seed)
    digest = hashlib.sha256()
    for cpu in agents:
        digest.update(serialize(cpu.program).encode())
        if name != "control":
            cpu.launch(ZERO_TAG)
            cores = list(cpu.cores())  # keep refs; cores retire during the pass
            cpu.step(CYCLES_PER_PASS)
            for core in cores:
                digest.update(repr(core.registers).encode())
            digest.update(repr(cpu.rng.getstate()).encode())
    return digest.hexdigest()
