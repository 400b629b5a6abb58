import statistics

import pytest

from sgpvm.bench import (
    AGENT_SWEEP,
    BENCHMARKS,
    BenchRecord,
    CSV_HEADER,
    build_agents,
    compute_speedup,
    emit_csv,
    parse_csv,
    run_microbenchmark,
    workload_fingerprint,
)
from sgpvm.rng import Xorshift64Star

FAST = dict(replicates=3, min_time_ns=200_000)  # keep timing loops tiny in unit tests


# reference single-agent wall timings used to pin the speedup arithmetic
# against the published full-scale measurements
_NOP_VANILLA_1 = [303.52, 328.01, 314.5, 313.99, 310.24, 312.32, 309.92, 311.39,
                  311.69, 310.43, 310.99, 310.44, 308.91, 318.68, 312.3, 310.81,
                  312.34, 313.65, 310.85, 309.23]
_NOP_LITE_1 = [38.11, 38.12, 35.6, 35.52, 35.61, 35.56, 35.59, 35.59, 35.6, 35.55,
               35.56, 35.55, 35.59, 35.65, 35.55, 35.59, 35.6, 35.7, 35.89, 35.82,
               35.85, 35.84, 36.2, 35.81, 35.75, 35.67, 35.6, 35.59, 35.61, 35.57,
               35.58, 35.6, 35.56, 35.56, 35.59, 35.62, 35.59, 35.59, 35.56, 35.52,
               35.56, 35.53, 35.57, 35.66, 35.8, 35.73, 35.83, 35.56, 35.59, 35.59]
_ARITHMETIC_VANILLA_1 = [760.19, 768.35, 768.87, 757.27, 759.5, 759.35, 759.5, 752.69,
                         741.52, 745.24, 740.75, 747.54, 745.73, 742.21, 741.18, 742.07,
                         746.56, 738.83, 776.2, 764.06, 769.96, 760.74, 761.06, 773.91,
                         779.18, 743.94, 748.39, 763.53, 750.32, 741.52, 773.12, 747.61,
                         750.6, 758.21, 756.08, 760.37, 765.8, 760.5, 760.77, 758.77,
                         765.48, 784.83, 765.47, 755.47, 781.9, 753.27, 751.04, 751.33,
                         749.13, 751.68]
_ARITHMETIC_LITE_1 = [36.18, 36.03, 35.97, 36.28, 36.18, 35.9, 36.09, 36.35, 35.98,
                      35.88, 35.9, 36.32, 36.97, 37.05, 37.25, 36.59, 36.75, 36.32,
                      35.98, 36.02, 36.06, 35.94, 36.6, 35.73, 36.41]


def records_from(library, implementation, walls, agents=1):
    return [BenchRecord(library, implementation, w, w, agents) for w in walls]


# --- record production --------------------------------------------------------

def test_replicate_count_row_arithmetic():
    records = run_microbenchmark("nop", "lite", 1, **FAST)
    assert len(records) == 3
    assert all(r.library == "nop" and r.implementation == "lite" and r.num_agents == 1
               for r in records)
    # cpu time can quantize to zero on kernels with jiffy-grained accounting
    assert all(r.wall_ns > 0 and r.cpu_ns >= 0 for r in records)


def test_flex_records_labelled_vanilla():
    records = run_microbenchmark("nop", "flex", 1, **FAST)
    assert all(r.implementation == "vanilla" for r in records)


def test_invalid_arguments_rejected_before_timing():
    with pytest.raises(ValueError, match="benchmark"):
        run_microbenchmark("warp", "lite", 1, **FAST)
    with pytest.raises(ValueError, match="backend"):
        run_microbenchmark("nop", "hyper", 1, **FAST)
    with pytest.raises(ValueError, match="sweep"):
        run_microbenchmark("nop", "lite", 7, **FAST)
    with pytest.raises(ValueError, match="replicates"):
        run_microbenchmark("nop", "lite", 1, replicates=0)


def test_agents_hold_distinct_seeded_programs():
    agents = build_agents("arithmetic", "lite", 4, base_seed=3)
    programs = [cpu.program for cpu in agents]
    assert len({p for p in programs}) == 4
    again = build_agents("arithmetic", "lite", 4, base_seed=3)
    assert [cpu.program for cpu in again] == programs


def test_complete_benchmark_uses_backend_dialects():
    lite_agents = build_agents("complete", "lite", 1, base_seed=4)
    flex_agents = build_agents("complete", "flex", 1, base_seed=4)
    lite_ops = {i.opcode for i in lite_agents[0].program.instructions}
    flex_ops = {i.opcode for i in flex_agents[0].program.instructions}
    assert not lite_ops & {"IfNotZero", "While", "CloseBlock"}
    assert not flex_ops & {"JumpIfNotZero", "JumpIfZero"}


@pytest.mark.parametrize("name", BENCHMARKS)
def test_every_benchmark_runs_both_backends(name):
    for backend in ("lite", "flex"):
        records = run_microbenchmark(name, backend, 1, replicates=1, min_time_ns=100_000)
        assert len(records) == 1


# --- speedup ------------------------------------------------------------------

def test_identical_sides_give_speedup_one():
    walls = [100.0, 110.0, 120.0]
    records = records_from("nop", "vanilla", walls) + records_from("nop", "lite", walls)
    rows = compute_speedup(records)
    assert len(rows) == 1
    assert rows[0].speedup == 1.0


def test_speedup_on_reference_single_agent_data():
    records = (
        records_from("nop", "vanilla", _NOP_VANILLA_1)
        + records_from("nop", "lite", _NOP_LITE_1)
        + records_from("arithmetic", "vanilla", _ARITHMETIC_VANILLA_1)
        + records_from("arithmetic", "lite", _ARITHMETIC_LITE_1)
    )
    rows = {r.library: r.speedup for r in compute_speedup(records)}
    # independent median oracle
    assert rows["nop"] == statistics.median(_NOP_VANILLA_1) / statistics.median(_NOP_LITE_1)
    assert 8.0 <= rows["nop"] <= 30.0
    assert abs(rows["nop"] - 8.74) < 0.01
    assert 20.0 <= rows["arithmetic"] <= 50.0
    assert abs(rows["arithmetic"] - 20.94) < 0.01


def test_speedup_order_independent():
    records = (
        records_from("nop", "vanilla", _NOP_VANILLA_1)
        + records_from("nop", "lite", _NOP_LITE_1)
    )
    rng = Xorshift64Star(5)
    shuffled = list(records)
    for i in range(len(shuffled) - 1, 0, -1):
        j = rng.below(i + 1)
        shuffled[i], shuffled[j] = shuffled[j], shuffled[i]
    assert compute_speedup(records) == compute_speedup(shuffled)


def test_missing_cell_reported():
    records = records_from("nop", "lite", [10.0])
    with pytest.raises(ValueError, match="nop/1 lacks vanilla"):
        compute_speedup(records)


# --- csv ------------------------------------------------------------------------

def test_csv_header_byte_exact(tmp_path):
    path = tmp_path / "bench.csv"
    emit_csv([], str(path))
    raw = path.read_bytes()
    assert raw == b"Library,Implementation,Wall Nanoseconds,CPU Nanoseconds,num agents\n"
    assert CSV_HEADER == "Library,Implementation,Wall Nanoseconds,CPU Nanoseconds,num agents"


def test_csv_example_row(tmp_path):
    path = tmp_path / "bench.csv"
    emit_csv([BenchRecord("arithmetic", "vanilla", 760.19, 749.88, 1)], str(path))
    lines = path.read_text().splitlines()
    assert lines[1] == "arithmetic,vanilla,760.19,749.88,1"


def test_csv_round_trip_lossless(tmp_path):
    rng = Xorshift64Star(6)
    records = []
    for i in range(100):
        lib = BENCHMARKS[rng.below(len(BENCHMARKS))]
        impl = ("lite", "vanilla")[rng.below(2)]
        agents = AGENT_SWEEP[rng.below(len(AGENT_SWEEP))]
        wall = float(f"{rng.uniform() * 10000:.2f}")
        cpu_t = float(f"{rng.uniform() * 10000:.2f}")
        records.append(BenchRecord(lib, impl, wall, cpu_t, agents))
    path = tmp_path / "bench.csv"
    emit_csv(records, str(path))
    assert parse_csv(str(path)) == records


def test_measured_records_round_trip(tmp_path):
    records = run_microbenchmark("arithmetic", "lite", 1, **FAST)
    path = tmp_path / "bench.csv"
    emit_csv(records, str(path))
    assert parse_csv(str(path)) == records


def test_parse_rejects_foreign_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n")
    with pytest.raises(ValueError, match="header"):
        parse_csv(str(path))


# --- workload fingerprints -------------------------------------------------------

def test_fingerprint_stable_and_seed_sensitive():
    a = workload_fingerprint("arithmetic", "lite", 1, base_seed=9)
    b = workload_fingerprint("arithmetic", "lite", 1, base_seed=9)
    c = workload_fingerprint("arithmetic", "lite", 1, base_seed=10)
    assert a == b
    assert a != c


def test_fingerprint_distinguishes_benchmarks():
    a = workload_fingerprint("nop", "lite", 1, base_seed=9)
    b = workload_fingerprint("arithmetic", "lite", 1, base_seed=9)
    assert a != b
