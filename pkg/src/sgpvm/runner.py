"""Run orchestration: replicated evolve runs, benchmark sweeps, and replay.

Every run writes a JSON manifest holding the config snapshot, derived
signal tags, per-replicate seeds, and SHA-256 checksums of every result
CSV. Evolve runs replay byte-identically from the manifest alone. Bench
timings are hardware noise by nature, so bench manifests instead pin a
semantic workload fingerprint (genomes plus execution outcomes) that
replay re-derives and compares.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass

from . import __version__
from .bench import (
    AGENT_SWEEP,
    BenchRecord,
    DEFAULT_BENCH_SEED,
    DEFAULT_MIN_TIME_NS,
    DEFAULT_REPLICATES,
    compute_speedup,
    emit_csv,
    emit_speedup_csv,
    run_microbenchmark,
    workload_fingerprint,
)
from .config import ConfigError, ExperimentConfig, config_to_text
from .evolution import EvolutionResult, run_evolution
from .problems import ChangingEnvConfig
from .rng import mix_seeds
from .tags import tag_to_hex

_REPLICATE_STREAM = 0x9EBB

HISTORY_HEADER = "generation,max_fitness,mean_fitness,solved"
SUMMARY_HEADER = "replicate,solved,generations"


class ReplayMismatch(RuntimeError):
    """Recomputed results disagree with the manifest checksums."""


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def history_csv_bytes(result: EvolutionResult) -> bytes:
    lines = [HISTORY_HEADER]
    for rec in result.history:
        lines.append(
            f"{rec.generation},{rec.max_fitness:.6f},{rec.mean_fitness:.6f},{int(rec.solved)}"
        )
    return ("\n".join(lines) + "\n").encode()


def replicate_seed(master_seed: int, index: int) -> int:
    return mix_seeds(master_seed, _REPLICATE_STREAM, index)


def _problem_tags(problem) -> dict:
    if isinstance(problem, ChangingEnvConfig):
        return {"signal_tags": [tag_to_hex(t) for t in problem.signal_tags]}
    return {
        "first_signals": [tag_to_hex(t) for t in problem.first_signals],
        "second_signals": [tag_to_hex(t) for t in problem.second_signals],
        "response_table": [list(row) for row in problem.response_table],
    }


def run_evolve(cfg: ExperimentConfig, out_dir: str | None = None) -> str:
    """Run all replicates, write history CSVs, summary CSV, and the manifest.

    Returns the manifest path.
    """
    out = out_dir if out_dir is not None else cfg.out_dir
    os.makedirs(out, exist_ok=True)
    problem = cfg.build_problem()
    setup = cfg.build_setup(problem)

    replicate_entries = []
    summary_lines = [SUMMARY_HEADER]
    for r in range(cfg.replicates):
        seed_r = replicate_seed(cfg.seed, r)
        result = run_evolution(setup, seed=seed_r)
        blob = history_csv_bytes(result)
        name = f"history_{r:03d}.csv"
        with open(os.path.join(out, name), "wb") as fh:
            fh.write(blob)
        solved = result.solved_at is not None
        last_gen = result.history[-1].generation
        summary_lines.append(f"{r},{int(solved)},{result.solved_at if solved else last_gen}")
        replicate_entries.append(
            {
                "index": r,
                "seed": seed_r,
                "solved": solved,
                "solved_at": result.solved_at,
                "history_csv": name,
                "history_sha256": _sha256(blob),
            }
        )

    summary_blob = ("\n".join(summary_lines) + "\n").encode()
    with open(os.path.join(out, "summary.csv"), "wb") as fh:
        fh.write(summary_blob)

    manifest = {
        "kind": "evolve",
        "artifact_version": __version__,
        "config_text": config_to_text(cfg),
        "master_seed": cfg.seed,
        "problem": _problem_tags(problem),
        "replicates": replicate_entries,
        "summary_csv": "summary.csv",
        "summary_sha256": _sha256(summary_blob),
    }
    manifest_path = os.path.join(out, "manifest.json")
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest_path


@dataclass(frozen=True)
class BenchRequest:
    benchmarks: tuple[str, ...]
    backends: tuple[str, ...]  # ("lite",), ("flex",) or both
    agent_counts: tuple[int, ...]
    replicates: int = DEFAULT_REPLICATES
    seed: int = DEFAULT_BENCH_SEED
    min_time_ns: int = DEFAULT_MIN_TIME_NS
    out: str = "bench.csv"


def run_bench(req: BenchRequest) -> str:
    """Run the requested sweep, write the timing CSV (+ speedup CSV when both
    backends ran), and the manifest. Returns the manifest path."""
    for agents in req.agent_counts:
        if agents not in AGENT_SWEEP:
            raise ConfigError(f"agent count {agents} not in declared sweep {AGENT_SWEEP}")
    records: list[BenchRecord] = []
    fingerprints = {}
    for name in req.benchmarks:
        for backend in req.backends:
            for agents in req.agent_counts:
                records.extend(
                    run_microbenchmark(
                        name, backend, agents,
                        replicates=req.replicates,
                        base_seed=req.seed,
                        min_time_ns=req.min_time_ns,
                    )
                )
                key = f"{name}/{backend}/{agents}"
                fingerprints[key] = workload_fingerprint(name, backend, agents, req.seed)
    emit_csv(records, req.out)

    speedup_path = None
    if set(req.backends) == {"lite", "flex"}:
        rows = compute_speedup(records)
        root, ext = os.path.splitext(req.out)
        speedup_path = f"{root}_speedup{ext or '.csv'}"
        emit_speedup_csv(rows, speedup_path)

    manifest = {
        "kind": "bench",
        "artifact_version": __version__,
        "benchmarks": list(req.benchmarks),
        "backends": list(req.backends),
        "agent_counts": list(req.agent_counts),
        "replicates": req.replicates,
        "seed": req.seed,
        "min_time_ns": req.min_time_ns,
        "timings_csv": req.out,
        "speedup_csv": speedup_path,
        "workload_fingerprints": fingerprints,
    }
    manifest_path = req.out + ".manifest.json"
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest_path


def load_manifest(path: str) -> dict:
    with open(path) as fh:
        manifest = json.load(fh)
    version = manifest.get("artifact_version")
    if version != __version__:
        raise ConfigError(
            f"manifest version {version!r} does not match artifact version {__version__!r}"
        )
    return manifest


def replay_evolve(manifest: dict, replicate: int) -> bytes:
    """Recompute one replicate's history; raise ReplayMismatch on divergence.

    Returns the recomputed history CSV bytes.
    """
    from .config import parse_config

    entries = manifest.get("replicates", [])
    if not 0 <= replicate < len(entries):
        raise ConfigError(f"replicate index {replicate} out of range [0, {len(entries)})")
    entry = entries[replicate]
    cfg = parse_config(manifest["config_text"])
    setup = cfg.build_setup()
    result = run_evolution(setup, seed=entry["seed"])
    blob = history_csv_bytes(result)
    digest = _sha256(blob)
    if digest != entry["history_sha256"]:
        raise ReplayMismatch(
            f"replicate {replicate}: checksum mismatch "
            f"(recomputed {digest[:12]}…, manifest {entry['history_sha256'][:12]}…)"
        )
    return blob


def replay_bench(manifest: dict) -> dict[str, str]:
    """Re-derive every workload fingerprint; raise ReplayMismatch on divergence."""
    recorded = manifest["workload_fingerprints"]
    recomputed = {}
    for key in recorded:
        name, backend, agents = key.split("/")
        recomputed[key] = workload_fingerprint(name, backend, int(agents), manifest["seed"])
    bad = [k for k in recorded if recorded[k] != recomputed[k]]
    if bad:
        raise ReplayMismatch("workload fingerprint mismatch for: " + ", ".join(sorted(bad)))
    return recomputed
