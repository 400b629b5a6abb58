"""Per-agent virtual CPU with two interchangeable execution backends.

lite  -- byte-code interpreter: the program is compiled once into flat
         integer tuples with jump targets and regulation targets resolved
         ahead of time, then executed by a dense switch over a fixed opcode
         enumeration. Fixed-size register file, no block stack. Because the
         compiler knows a program is straight-line, a lone core can execute
         it as a contiguous slice.

flex  -- reference interpreter embodying the vanilla design the optimized
         one is measured against: dispatch through a table of dynamically
         bound per-opcode handlers, register file sized from runtime
         configuration, block-structured control flow maintained on a
         per-core block stack, and a fully generic scheduler that re-walks
         the core list every cycle (nothing about the workload is assumed
         at bind time).

Both backends share one scheduling semantics: each cycle, every active core
executes exactly one instruction in launch order; cores that terminate or
run past their module end are removed at cycle boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from . import isa
from .isa import to_i64, wrap_i64
from .program import Instruction, Program, REGISTER_COUNT
from .rng import Xorshift64Star
from .tags import (
    MatchCache,
    RegulationState,
    Tag,
    cached_best_match,
    match_score,
)

DEFAULT_CORE_CAPACITY = 16

BACKENDS = ("lite", "flex")


@dataclass(frozen=True)
class FlexConfig:
    """Runtime configuration the flex backend reads register sizing from."""

    num_registers: int = REGISTER_COUNT

    def __post_init__(self):
        if self.num_registers < REGISTER_COUNT:
            raise ValueError(
                f"flex register file must hold at least {REGISTER_COUNT} registers"
            )


class Core:
    """One thread of execution inside a virtual CPU."""

    __slots__ = ("cid", "ip", "start", "end", "module_index", "registers", "block_stack", "dead")

    def __init__(self, cid: int, start: int, end: int, module_index: int,
                 registers: list[float], block_stack: list | None):
        self.cid = cid
        self.ip = start
        self.start = start
        self.end = end
        self.module_index = module_index
        self.registers = registers
        self.block_stack = block_stack
        self.dead = False


def _raw_argmax(tag: Tag, module_tags: tuple[Tag, ...]) -> int:
    """Module index whose tag best raw-matches `tag`; ties to the lowest index."""
    best = 0
    best_score = -1.0
    for i, mtag in enumerate(module_tags):
        s = match_score(tag, mtag)
        if s > best_score:
            best = i
            best_score = s
    return best


# ---------------------------------------------------------------------------
# lite backend: ahead-of-time compilation to integer tuples
# ---------------------------------------------------------------------------

_NON_STRAIGHT = {isa.OP_JUMP_IF_NOT_ZERO, isa.OP_JUMP_IF_ZERO, isa.OP_TERMINATE}


class LiteCode:
    __slots__ = ("code", "straight")

    def __init__(self, code: list[tuple[int, int, int, int]], straight: bool):
        self.code = code
        self.straight = straight


def _resolve_jump(pos: int, start: int, end: int,
                  anchors: list[tuple[int, Tag]], tag: Tag) -> int:
    """Static target of a jump at `pos`: the best tag-matching LocalAnchor.

    The search runs forward from pos+1 and wraps within the module, so ties
    resolve to the first anchor encountered in that order. -1 means no
    anchor exists and the jump falls through.
    """
    span = end - start
    if span <= 0 or not anchors:
        return -1
    ordered = sorted(anchors, key=lambda item: (item[0] - pos - 1) % span)
    best_pos = -1
    best_score = -1.0
    for apos, atag in ordered:
        s = match_score(tag, atag)
        if s > best_score:
            best_pos = apos
            best_score = s
    return best_pos


def _compile_lite(program: Program) -> LiteCode:
    insts = program.instructions
    module_tags = program.module_tags
    spans = [program.module_span(i) for i in range(len(program.modules))]
    anchors_by_module: list[list[tuple[int, Tag]]] = []
    for start, end in spans:
        anchors_by_module.append(
            [(p, insts[p].tag) for p in range(start, end) if insts[p].opcode == isa.LOCAL_ANCHOR]
        )

    def module_of(pos: int) -> int:
        for i, (start, end) in enumerate(spans):
            if start <= pos < end:
                return i
        return len(spans) - 1

    code: list[tuple[int, int, int, int]] = []
    straight = True
    for pos, inst in enumerate(insts):
        try:
            op = isa.opcode_code(inst.opcode)
        except KeyError:
            raise ValueError(
                f"opcode {inst.opcode!r} is not executable by the lite backend"
            ) from None
        if op in _NON_STRAIGHT:
            straight = False
        if op == isa.OP_JUMP_IF_NOT_ZERO or op == isa.OP_JUMP_IF_ZERO:
            m = module_of(pos)
            start, end = spans[m]
            target = _resolve_jump(pos, start, end, anchors_by_module[m], inst.tag)
            code.append((op, inst.a, target, 0))
        elif op >= isa.OP_SET_REGULATOR and op <= isa.OP_CLEAR_REGULATOR:
            code.append((op, inst.a, _raw_argmax(inst.tag, module_tags), 0))
        elif op >= isa.OP_RESPONSE_BASE:
            code.append((op, op - isa.OP_RESPONSE_BASE, 0, 0))
        else:
            code.append((op, inst.a, inst.b, inst.c))
    return LiteCode(code, straight)


def _lite_code(program: Program) -> LiteCode:
    lc = program._lite_code
    if lc is None:
        lc = _compile_lite(program)
        program._lite_code = lc
    return lc


def _run_lite_straight(cpu: "VirtualCpu", core: Core, cycles: int) -> None:
    # Lone core, straight-line program: the whole cycle budget is one slice.
    regs = core.registers
    rng = cpu.rng
    ip = core.ip
    stop = ip + cycles
    end = core.end
    if stop > end:
        stop = end
    for op, a, b, c in cpu._lite.code[ip:stop]:
        if op == 0:  # Nop
            pass
        elif op == 1:
            regs[c] = regs[a] + regs[b]
        elif op == 2:
            regs[c] = regs[a] - regs[b]
        elif op == 3:
            regs[c] = regs[a] * regs[b]
        elif op == 4:
            d = regs[b]
            regs[c] = regs[a] / d if d != 0.0 else 0.0
        elif op == 5 or op == 6:  # anchors execute as no-ops
            pass
        elif op == 7:
            regs[c] = float(to_i64(regs[a]) & to_i64(regs[b]))
        elif op == 8:
            regs[c] = float(to_i64(regs[a]) | to_i64(regs[b]))
        elif op == 9:
            regs[c] = float(~to_i64(regs[a]))
        elif op == 10:
            regs[c] = float(to_i64(regs[a]) ^ to_i64(regs[b]))
        elif op == 11:
            regs[c] = float(wrap_i64(to_i64(regs[a]) << (to_i64(regs[b]) % 64)))
        elif op == 12:
            regs[c] = float(to_i64(regs[a]) >> (to_i64(regs[b]) % 64))
        elif op == 13:
            regs[c] = 1.0 if regs[a] == regs[b] else 0.0
        elif op == 14:
            regs[c] = 1.0 if regs[a] != regs[b] else 0.0
        elif op == 15:
            regs[c] = 1.0 if regs[a] < regs[b] else 0.0
        elif op == 16:
            regs[c] = 1.0 if regs[a] > regs[b] else 0.0
        elif op == 20:
            regs[a] = rng.uniform()
        elif op == 21:
            p = regs[b]
            if not p > 0.0:
                p = 0.0
            elif p > 1.0:
                p = 1.0
            regs[a] = 1.0 if rng.uniform() < p else 0.0
        elif op == 22:
            cpu.regulation.set(b, regs[a])
        elif op == 23:
            cpu.regulation.adjust(b, regs[a])
        elif op == 24:
            regs[a] = cpu.regulation[b]
        elif op == 25:
            cpu.regulation.clear(b)
        else:  # op >= OP_RESPONSE_BASE; a holds the response index
            cpu.last_response = a
            cpu.response_count += 1
    core.ip = stop


def _run_lite_general(cpu: "VirtualCpu", cycles: int) -> None:
    cores = cpu._cores
    code = cpu._lite.code
    rng = cpu.rng
    for _ in range(cycles):
        if not cores:
            break
        removed = False
        for core in cores:
            if core.dead:
                removed = True
                continue
            ip = core.ip
            if ip >= core.end:
                core.dead = True
                removed = True
                continue
            regs = core.registers
            op, a, b, c = code[ip]
            ip += 1
            if op == 0:
                pass
            elif op == 1:
                regs[c] = regs[a] + regs[b]
            elif op == 2:
                regs[c] = regs[a] - regs[b]
            elif op == 3:
                regs[c] = regs[a] * regs[b]
            elif op == 4:
                d = regs[b]
                regs[c] = regs[a] / d if d != 0.0 else 0.0
            elif op == 5 or op == 6:
                pass
            elif op == 7:
                regs[c] = float(to_i64(regs[a]) & to_i64(regs[b]))
            elif op == 8:
                regs[c] = float(to_i64(regs[a]) | to_i64(regs[b]))
            elif op == 9:
                regs[c] = float(~to_i64(regs[a]))
            elif op == 10:
                regs[c] = float(to_i64(regs[a]) ^ to_i64(regs[b]))
            elif op == 11:
                regs[c] = float(wrap_i64(to_i64(regs[a]) << (to_i64(regs[b]) % 64)))
            elif op == 12:
                regs[c] = float(to_i64(regs[a]) >> (to_i64(regs[b]) % 64))
            elif op == 13:
                regs[c] = 1.0 if regs[a] == regs[b] else 0.0
            elif op == 14:
                regs[c] = 1.0 if regs[a] != regs[b] else 0.0
            elif op == 15:
                regs[c] = 1.0 if regs[a] < regs[b] else 0.0
            elif op == 16:
                regs[c] = 1.0 if regs[a] > regs[b] else 0.0
            elif op == 17:  # JumpIfNotZero; b holds the precompiled anchor target
                if regs[a] != 0.0 and b >= 0:
                    ip = b
            elif op == 18:  # JumpIfZero
                if regs[a] == 0.0 and b >= 0:
                    ip = b
            elif op == 19:  # Terminate
                core.dead = True
                removed = True
            elif op == 20:
                regs[a] = rng.uniform()
            elif op == 21:
                p = regs[b]
                if not p > 0.0:
                    p = 0.0
                elif p > 1.0:
                    p = 1.0
                regs[a] = 1.0 if rng.uniform() < p else 0.0
            elif op == 22:
                cpu.regulation.set(b, regs[a])
            elif op == 23:
                cpu.regulation.adjust(b, regs[a])
            elif op == 24:
                regs[a] = cpu.regulation[b]
            elif op == 25:
                cpu.regulation.clear(b)
            else:
                cpu.last_response = a
                cpu.response_count += 1
            core.ip = ip
            if ip >= core.end:  # ran past the module: retire at this boundary
                core.dead = True
                removed = True
        if removed:
            cores[:] = [k for k in cores if not k.dead]


def _run_lite(cpu: "VirtualCpu", cycles: int) -> None:
    cores = cpu._cores
    if cycles <= 0 or not cores:
        return
    if len(cores) == 1 and cpu._lite.straight:
        core = cores[0]
        _run_lite_straight(cpu, core, cycles)
        if core.ip >= core.end:
            cores.clear()
        return
    _run_lite_general(cpu, cycles)


# ---------------------------------------------------------------------------
# flex backend: handler table over instruction objects
# ---------------------------------------------------------------------------

FlexHandler = Callable[["VirtualCpu", Core, Instruction], None]

_FLEX_HANDLERS: dict[str, FlexHandler] = {}


def _flex_op(name: str):
    def register(fn: FlexHandler) -> FlexHandler:
        _FLEX_HANDLERS[name] = fn
        return fn
    return register


@_flex_op(isa.NOP)
def _fx_nop(cpu, core, inst):
    core.ip += 1


_FLEX_HANDLERS[isa.GLOBAL_ANCHOR] = _fx_nop
_FLEX_HANDLERS[isa.LOCAL_ANCHOR] = _fx_nop


@_flex_op(isa.ADD)
def _fx_add(cpu, core, inst):
    r = core.registers
    r[inst.c] = r[inst.a] + r[inst.b]
    core.ip += 1


@_flex_op(isa.SUBTRACT)
def _fx_subtract(cpu, core, inst):
    r = core.registers
    r[inst.c] = r[inst.a] - r[inst.b]
    core.ip += 1


@_flex_op(isa.MULTIPLY)
def _fx_multiply(cpu, core, inst):
    r = core.registers
    r[inst.c] = r[inst.a] * r[inst.b]
    core.ip += 1


@_flex_op(isa.DIVIDE)
def _fx_divide(cpu, core, inst):
    r = core.registers
    d = r[inst.b]
    r[inst.c] = r[inst.a] / d if d != 0.0 else 0.0
    core.ip += 1


@_flex_op(isa.AND)
def _fx_and(cpu, core, inst):
    r = core.registers
    r[inst.c] = float(to_i64(r[inst.a]) & to_i64(r[inst.b]))
    core.ip += 1


@_flex_op(isa.OR)
def _fx_or(cpu, core, inst):
    r = core.registers
    r[inst.c] = float(to_i64(r[inst.a]) | to_i64(r[inst.b]))
    core.ip += 1


@_flex_op(isa.NOT)
def _fx_not(cpu, core, inst):
    r = core.registers
    r[inst.c] = float(~to_i64(r[inst.a]))
    core.ip += 1


@_flex_op(isa.XOR)
def _fx_xor(cpu, core, inst):
    r = core.registers
    r[inst.c] = float(to_i64(r[inst.a]) ^ to_i64(r[inst.b]))
    core.ip += 1


@_flex_op(isa.SHIFT_LEFT)
def _fx_shift_left(cpu, core, inst):
    r = core.registers
    r[inst.c] = float(wrap_i64(to_i64(r[inst.a]) << (to_i64(r[inst.b]) % 64)))
    core.ip += 1


@_flex_op(isa.SHIFT_RIGHT)
def _fx_shift_right(cpu, core, inst):
    r = core.registers
    r[inst.c] = float(to_i64(r[inst.a]) >> (to_i64(r[inst.b]) % 64))
    core.ip += 1


@_flex_op(isa.EQUAL)
def _fx_equal(cpu, core, inst):
    r = core.registers
    r[inst.c] = 1.0 if r[inst.a] == r[inst.b] else 0.0
    core.ip += 1


@_flex_op(isa.NOT_EQUAL)
def _fx_not_equal(cpu, core, inst):
    r = core.registers
    r[inst.c] = 1.0 if r[inst.a] != r[inst.b] else 0.0
    core.ip += 1


@_flex_op(isa.LESS_THAN)
def _fx_less_than(cpu, core, inst):
    r = core.registers
    r[inst.c] = 1.0 if r[inst.a] < r[inst.b] else 0.0
    core.ip += 1


@_flex_op(isa.GREATER_THAN)
def _fx_greater_than(cpu, core, inst):
    r = core.registers
    r[inst.c] = 1.0 if r[inst.a] > r[inst.b] else 0.0
    core.ip += 1


@_flex_op(isa.TERMINATE)
def _fx_terminate(cpu, core, inst):
    core.dead = True
    core.ip += 1


@_flex_op(isa.RAND_UNIFORM)
def _fx_rand_uniform(cpu, core, inst):
    core.registers[inst.a] = cpu.rng.uniform()
    core.ip += 1


@_flex_op(isa.RAND_BERNOULLI)
def _fx_rand_bernoulli(cpu, core, inst):
    p = core.registers[inst.b]
    if not p > 0.0:
        p = 0.0
    elif p > 1.0:
        p = 1.0
    core.registers[inst.a] = 1.0 if cpu.rng.uniform() < p else 0.0
    core.ip += 1


@_flex_op(isa.SET_REGULATOR)
def _fx_set_regulator(cpu, core, inst):
    # target module resolved dynamically on each execution
    m = _raw_argmax(inst.tag, cpu._module_tags)
    cpu.regulation.set(m, core.registers[inst.a])
    core.ip += 1


@_flex_op(isa.ADJUST_REGULATOR)
def _fx_adjust_regulator(cpu, core, inst):
    m = _raw_argmax(inst.tag, cpu._module_tags)
    cpu.regulation.adjust(m, core.registers[inst.a])
    core.ip += 1


@_flex_op(isa.SENSE_REGULATOR)
def _fx_sense_regulator(cpu, core, inst):
    m = _raw_argmax(inst.tag, cpu._module_tags)
    core.registers[inst.a] = cpu.regulation[m]
    core.ip += 1


@_flex_op(isa.CLEAR_REGULATOR)
def _fx_clear_regulator(cpu, core, inst):
    m = _raw_argmax(inst.tag, cpu._module_tags)
    cpu.regulation.clear(m)
    core.ip += 1


def _skip_block(insts: tuple[Instruction, ...], ip: int, end: int) -> int:
    """Position just past the CloseBlock matching the opener at `ip`, or module end."""
    depth = 1
    pos = ip + 1
    while pos < end:
        op = insts[pos].opcode
        if op == isa.IF_NOT_ZERO or op == isa.WHILE:
            depth += 1
        elif op == isa.CLOSE_BLOCK:
            depth -= 1
            if depth == 0:
                return pos + 1
        pos += 1
    return end


@_flex_op(isa.IF_NOT_ZERO)
def _fx_if_not_zero(cpu, core, inst):
    if core.registers[inst.a] != 0.0:
        core.block_stack.append((False, core.ip))
        core.ip += 1
    else:
        core.ip = _skip_block(cpu._insts, core.ip, core.end)


@_flex_op(isa.WHILE)
def _fx_while(cpu, core, inst):
    if core.registers[inst.a] != 0.0:
        core.block_stack.append((True, core.ip))
        core.ip += 1
    else:
        core.ip = _skip_block(cpu._insts, core.ip, core.end)


@_flex_op(isa.CLOSE_BLOCK)
def _fx_close_block(cpu, core, inst):
    stack = core.block_stack
    if not stack:
        core.ip += 1  # stray close: no open block
        return
    is_loop, open_ip = stack.pop()
    core.ip = open_ip if is_loop else core.ip + 1


def _make_response_handler(k: int) -> FlexHandler:
    def _fx_response(cpu, core, inst):
        cpu.last_response = k
        cpu.response_count += 1
        core.ip += 1
    return _fx_response


def _flex_handler(opcode: str) -> FlexHandler | None:
    h = _FLEX_HANDLERS.get(opcode)
    if h is None:
        k = isa.response_index(opcode)
        if k is not None:
            h = _make_response_handler(k)
            _FLEX_HANDLERS[opcode] = h
    return h


def _run_flex(cpu: "VirtualCpu", cycles: int) -> None:
    cores = cpu._cores
    insts = cpu._insts
    handlers = cpu._handlers
    for _ in range(cycles):
        if not cores:
            break
        removed = False
        for core in cores:
            if core.dead:
                removed = True
                continue
            ip = core.ip
            if ip >= core.end:
                core.dead = True
                removed = True
                continue
            inst = insts[ip]
            handlers[inst.opcode](cpu, core, inst)
            if core.dead or core.ip >= core.end:  # retire at this boundary
                core.dead = True
                removed = True
        if removed:
            cores[:] = [k for k in cores if not k.dead]


# ---------------------------------------------------------------------------
# the virtual CPU
# ---------------------------------------------------------------------------


class VirtualCpu:
    """Execution state for one agent: cores, regulators, match cache, PRNG."""

    def __init__(
        self,
        program: Program,
        backend: str = "lite",
        *,
        seed: int = 0,
        core_capacity: int = DEFAULT_CORE_CAPACITY,
        min_raw: float = 0.0,
        flex_config: FlexConfig | None = None,
    ):
        if backend not in BACKENDS:
            raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
        if core_capacity < 1:
            raise ValueError("core capacity must be >= 1")
        self.program = program
        self.backend = backend
        self.core_capacity = core_capacity
        self.min_raw = min_raw
        self.rng = Xorshift64Star(seed)
        self.cache = MatchCache()
        self.regulation = RegulationState(len(program.modules), self.cache)
        self.last_response: Optional[int] = None
        self.response_count = 0
        self._cores: list[Core] = []
        self._next_core_id = 0
        self._module_tags = program.module_tags
        self._spans = [program.module_span(i) for i in range(len(program.modules))]

        if backend == "lite":
            self._lite = _lite_code(program)
            self._step = _run_lite
        else:
            self.flex_config = flex_config if flex_config is not None else FlexConfig()
            self._insts = program.instructions
            handlers: dict[str, FlexHandler] = {}
            for inst in program.instructions:
                if inst.opcode not in handlers:
                    h = _flex_handler(inst.opcode)
                    if h is None:
                        raise ValueError(
                            f"opcode {inst.opcode!r} is not executable by the flex backend"
                        )
                    handlers[inst.opcode] = h
            self._handlers = handlers
            self._step = _run_flex

    @property
    def core_count(self) -> int:
        return len(self._cores)

    def launch(self, signal: Tag) -> bool:
        """Start a core on the module selected for `signal`.

        Returns False (and changes nothing) when no module clears the raw
        threshold or all cores are busy; a saturated launch drops the signal.
        """
        idx = cached_best_match(
            signal, self.cache, self._module_tags, self.regulation, self.min_raw
        )
        if idx is None or len(self._cores) >= self.core_capacity:
            return False
        start, end = self._spans[idx]
        if self.backend == "lite":
            registers = [0.0] * REGISTER_COUNT
            block_stack = None
        else:
            registers = [0.0] * self.flex_config.num_registers
            block_stack = []
        core = Core(self._next_core_id, start, end, idx, registers, block_stack)
        self._next_core_id += 1
        self._cores.append(core)
        return True

    def step(self, cycles: int) -> None:
        """Run `cycles` scheduling rounds; one instruction per active core per round."""
        if cycles < 0:
            raise ValueError("cycles must be >= 0")
        self._step(self, cycles)

    def kill_all_cores(self) -> None:
        """Drop every active core; regulators, cache, PRNG, and responses survive."""
        self._cores.clear()

    def reset_response_buffer(self) -> None:
        self.last_response = None
        self.response_count = 0

    def cores(self) -> list[Core]:
        """Live view for inspection; treat as read-only."""
        return self._cores


# ---------------------------------------------------------------------------
# cross-backend verification
# ---------------------------------------------------------------------------

TraceEntry = tuple[int, int, str, tuple[float, ...]]


def run_equivalence_trace(
    program: Program,
    signal: Tag,
    cycles: int,
    seed: int,
    backend: str,
) -> list[TraceEntry]:
    """Instruction-by-instruction trace of a single-signal run.

    Only defined for programs free of control-flow opcodes (jumps and
    blocks), whose semantics are backend-independent; anything else is
    refused so traces can be compared across backends element for element.
    """
    divergent = sorted(
        {inst.opcode for inst in program.instructions} & set(isa.CONTROL_FLOW_OPS)
    )
    if divergent:
        raise ValueError(
            "program contains backend-divergent control-flow opcodes: "
            + ", ".join(divergent)
        )
    cpu = VirtualCpu(program, backend, seed=seed)
    cpu.launch(signal)
    trace: list[TraceEntry] = []
    for cycle in range(cycles):
        if not cpu._cores:
            break
        core = cpu._cores[0]
        prev_ip = core.ip
        if prev_ip >= core.end:
            break
        cpu.step(1)
        trace.append(
            (cycle, core.cid, program.instructions[prev_ip].opcode, tuple(core.registers))
        )
    return trace
