"""The two evolutionary benchmark environments.

Changing Environment: K mutually exclusive signals, each demanding its own
response instruction. Contextual Signal: 16 ordered signal pairs mapped to
4 responses; the first signal of a pair is context that must survive a
core kill, which is exactly what regulation is for.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import isa
from .cpu import VirtualCpu
from .program import Instruction, Program
from .rng import Xorshift64Star, mix_seeds
from .tags import Tag, ZERO_TAG, best_match

CHANGING_ENV_K_CHOICES = (2, 4, 8, 16)
CONTEXTUAL_SIGNALS = 4
CONTEXTUAL_RESPONSES = 4

_SHUFFLE_STREAM = 0x5F17
_CPU_STREAM = 0xC71C


def _distinct_tags(n: int, rng: Xorshift64Star) -> tuple[Tag, ...]:
    tags: list[Tag] = []
    seen = set()
    while len(tags) < n:
        t = rng.next_u64()
        if t not in seen:
            seen.add(t)
            tags.append(t)
    return tuple(tags)


def changing_env_set(k: int) -> isa.InstructionSetSpec:
    return isa.with_responses(isa.COMPLETE_SET, k, f"changing_env_k{k}")


def contextual_signal_set(regulation: bool = True) -> isa.InstructionSetSpec:
    """Complete set without RNG opcodes (so solutions cannot guess), plus
    four responses; optionally with regulation stripped as well."""
    drop = set(isa.RNG_OPS)
    name = "contextual_signal"
    if not regulation:
        drop.update(isa.REGULATION_OPS)
        name = "contextual_signal_noreg"
    base = isa.register_set(
        isa.InstructionSetSpec(
            f"{name}_base",
            tuple(op for op in isa.COMPLETE_SET.opcodes if op not in drop),
        )
    )
    return isa.with_responses(base, CONTEXTUAL_RESPONSES, name)


@dataclass(frozen=True)
class ChangingEnvConfig:
    k: int
    signal_tags: tuple[Tag, ...]
    cycles_per_signal: int = 128

    def __post_init__(self):
        if self.k not in CHANGING_ENV_K_CHOICES:
            raise ValueError(f"K must be one of {CHANGING_ENV_K_CHOICES}, got {self.k}")
        if len(self.signal_tags) != self.k:
            raise ValueError(f"expected {self.k} signal tags, got {len(self.signal_tags)}")
        if len(set(self.signal_tags)) != self.k:
            raise ValueError("signal tags must be pairwise distinct")
        if self.cycles_per_signal < 0:
            raise ValueError("cycles_per_signal must be >= 0")

    @classmethod
    def from_seed(cls, k: int, seed: int, cycles_per_signal: int = 128) -> "ChangingEnvConfig":
        rng = Xorshift64Star(mix_seeds(seed, 0x7A65, k))
        return cls(k, _distinct_tags(k, rng), cycles_per_signal)

    @property
    def instruction_set(self) -> isa.InstructionSetSpec:
        return changing_env_set(self.k)

    @property
    def perfect_fitness(self) -> int:
        return self.k


def _shuffled(n: int, rng: Xorshift64Star) -> list[int]:
    # Fisher-Yates, exactly n-1 draws
    order = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rng.below(i + 1)
        order[i], order[j] = order[j], order[i]
    return order


def eval_changing_environment(
    program: Program,
    cfg: ChangingEnvConfig,
    seed: int,
    backend: str = "lite",
) -> tuple[int, list[bool]]:
    """Fitness in [0, K] plus the per-signal pass vector (in signal order).

    One fresh CPU processes all K signals in a seed-shuffled order; a signal
    scores iff the last response expressed during its window names it.
    """
    order = _shuffled(cfg.k, Xorshift64Star(mix_seeds(seed, _SHUFFLE_STREAM)))
    cpu = VirtualCpu(program, backend, seed=mix_seeds(seed, _CPU_STREAM))
    passed = [False] * cfg.k
    for k in order:
        cpu.reset_response_buffer()
        cpu.launch(cfg.signal_tags[k])
        cpu.step(cfg.cycles_per_signal)
        if cpu.last_response == k:
            passed[k] = True
    return sum(passed), passed


def _default_response_table() -> tuple[tuple[int, ...], ...]:
    # (i + j) mod 4: every row and column is non-constant, so the first
    # signal genuinely matters
    return tuple(
        tuple((i + j) % CONTEXTUAL_RESPONSES for j in range(CONTEXTUAL_SIGNALS))
        for i in range(CONTEXTUAL_SIGNALS)
    )


@dataclass(frozen=True)
class ContextualSignalConfig:
    first_signals: tuple[Tag, ...]
    second_signals: tuple[Tag, ...]
    response_table: tuple[tuple[int, ...], ...] = field(default_factory=_default_response_table)
    cycles_per_signal: int = 128
    regulation: bool = True

    def __post_init__(self):
        if len(self.first_signals) != CONTEXTUAL_SIGNALS:
            raise ValueError(f"expected {CONTEXTUAL_SIGNALS} first signals")
        if len(self.second_signals) != CONTEXTUAL_SIGNALS:
            raise ValueError(f"expected {CONTEXTUAL_SIGNALS} second signals")
        all_tags = self.first_signals + self.second_signals
        if len(set(all_tags)) != len(all_tags):
            raise ValueError("all 8 signal tags must be distinct")
        if len(self.response_table) != CONTEXTUAL_SIGNALS or any(
            len(row) != CONTEXTUAL_SIGNALS for row in self.response_table
        ):
            raise ValueError("response table must be 4x4")
        for row in self.response_table:
            for r in row:
                if not 0 <= r < CONTEXTUAL_RESPONSES:
                    raise ValueError(f"response index {r} out of range")
        if self.cycles_per_signal < 0:
            raise ValueError("cycles_per_signal must be >= 0")

    @classmethod
    def from_seed(
        cls,
        seed: int,
        regulation: bool = True,
        response_table: tuple[tuple[int, ...], ...] | None = None,
        cycles_per_signal: int = 128,
    ) -> "ContextualSignalConfig":
        rng = Xorshift64Star(mix_seeds(seed, 0xC057))
        tags = _distinct_tags(2 * CONTEXTUAL_SIGNALS, rng)
        if response_table is None:
            response_table = _default_response_table()
        return cls(tags[:4], tags[4:], response_table, cycles_per_signal, regulation)

    @property
    def instruction_set(self) -> isa.InstructionSetSpec:
        return contextual_signal_set(self.regulation)

    @property
    def case_count(self) -> int:
        return CONTEXTUAL_SIGNALS * CONTEXTUAL_SIGNALS

    @property
    def perfect_fitness(self) -> int:
        return self.case_count


def eval_contextual_signal(
    program: Program,
    cfg: ContextualSignalConfig,
    backend: str = "lite",
) -> list[bool]:
    """Pass/fail over the 16 ordered pairs, row-major in (first, second).

    Per pair: fresh CPU, first signal, 128 cycles, kill cores (regulators
    survive), reset responses, second signal, 128 cycles; the recorded
    response must match the table. Deterministic: the instruction set
    carries no RNG opcodes.
    """
    results: list[bool] = []
    for i in range(CONTEXTUAL_SIGNALS):
        for j in range(CONTEXTUAL_SIGNALS):
            cpu = VirtualCpu(program, backend, seed=0)
            cpu.launch(cfg.first_signals[i])
            cpu.step(cfg.cycles_per_signal)
            cpu.kill_all_cores()
            cpu.reset_response_buffer()
            cpu.launch(cfg.second_signals[j])
            cpu.step(cfg.cycles_per_signal)
            results.append(cpu.last_response == cfg.response_table[i][j])
    return results


# ---------------------------------------------------------------------------
# hand-built organisms (protocol oracles and demos)
# ---------------------------------------------------------------------------


def _anchor(tag: Tag) -> Instruction:
    return Instruction(isa.GLOBAL_ANCHOR, 0, 0, 0, tag)


def perfect_changing_env_program(cfg: ChangingEnvConfig) -> Program:
    """K modules, module k tagged exactly like signal k with body Response_k."""
    genome: list[Instruction] = []
    for k, tag in enumerate(cfg.signal_tags):
        genome.append(_anchor(tag))
        genome.append(Instruction(isa.response_opcode(k), 0, 0, 0, ZERO_TAG))
    return Program(genome, cfg.instruction_set.name)


def constant_response_program(set_name: str, k: int) -> Program:
    """Single zero-tagged module that always expresses Response_k."""
    genome = [_anchor(ZERO_TAG), Instruction(isa.response_opcode(k), 0, 0, 0, ZERO_TAG)]
    return Program(genome, set_name)


def second_signal_map_program(
    cfg: ContextualSignalConfig, mapping: tuple[int, int, int, int]
) -> Program:
    """First-signal-blind organism: module j (tagged like second signal j)
    responds mapping[j] regardless of context."""
    genome: list[Instruction] = []
    for j in range(CONTEXTUAL_SIGNALS):
        genome.append(_anchor(cfg.second_signals[j]))
        genome.append(Instruction(isa.response_opcode(mapping[j]), 0, 0, 0, ZERO_TAG))
    return Program(genome, cfg.instruction_set.name)


def regulation_demo_program(cfg: ContextualSignalConfig) -> Program:
    """Perfect solver that stores context in regulators.

    Layout: 4 context modules (tagged like the first signals) each promote
    one bank of 4 responder modules; responder bank i for second signal j is
    tagged with second_signals[j] with i low bits flipped, so banks stay
    distinguishable for targeted regulation while still raw-matching their
    second signal almost perfectly. A +1 promotion dominates the <= 3/64
    raw-score penalty, so the promoted bank always wins the second launch.
    """
    if not cfg.regulation:
        raise ValueError("regulation_demo_program needs a regulation-enabled config")
    bank_tag = [
        [cfg.second_signals[j] ^ ((1 << i) - 1) for j in range(CONTEXTUAL_SIGNALS)]
        for i in range(CONTEXTUAL_SIGNALS)
    ]
    all_tags = [t for row in bank_tag for t in row]
    all_tags.extend(cfg.first_signals)
    if len(set(all_tags)) != len(all_tags):
        raise ValueError("signal tags too close together for the bank construction")

    # verify the selection arithmetic before building: with bank i promoted
    # by +1, the second launch for signal j must pick responder (i, j)
    module_tags = list(cfg.first_signals) + [bank_tag[i][j]
                                             for i in range(CONTEXTUAL_SIGNALS)
                                             for j in range(CONTEXTUAL_SIGNALS)]
    for i in range(CONTEXTUAL_SIGNALS):
        reg = [0.0] * len(module_tags)
        for j in range(CONTEXTUAL_SIGNALS):
            reg[CONTEXTUAL_SIGNALS + i * CONTEXTUAL_SIGNALS + j] = 1.0
        if best_match(cfg.first_signals[i], module_tags, [0.0] * len(module_tags)) != i:
            raise ValueError("first-signal tags too close together for the bank construction")
        for j in range(CONTEXTUAL_SIGNALS):
            want = CONTEXTUAL_SIGNALS + i * CONTEXTUAL_SIGNALS + j
            if best_match(cfg.second_signals[j], module_tags, reg) != want:
                raise ValueError("second-signal tags too close together for the bank construction")

    genome: list[Instruction] = []
    # context modules: put 1.0 into r1, then promote every responder in bank i
    for i in range(CONTEXTUAL_SIGNALS):
        genome.append(_anchor(cfg.first_signals[i]))
        genome.append(Instruction(isa.EQUAL, 0, 0, 1, ZERO_TAG))
        for j in range(CONTEXTUAL_SIGNALS):
            genome.append(Instruction(isa.ADJUST_REGULATOR, 1, 0, 0, bank_tag[i][j]))
    # responder modules
    for i in range(CONTEXTUAL_SIGNALS):
        for j in range(CONTEXTUAL_SIGNALS):
            genome.append(_anchor(bank_tag[i][j]))
            genome.append(
                Instruction(isa.response_opcode(cfg.response_table[i][j]), 0, 0, 0, ZERO_TAG)
            )
    return Program(genome, cfg.instruction_set.name)
