"""Opcode inventory, the named benchmark instruction sets, and numeric conventions.

The canonical sets use jump-style control flow, which is what the optimized
backend executes. The reference backend speaks a block-structured dialect
instead (IfNotZero/While/CloseBlock); `flex_dialect` swaps the control-flow
members and leaves everything else untouched. Genomes never mix dialects.
"""

from __future__ import annotations

from dataclasses import dataclass

# --- canonical opcode spellings -------------------------------------------

NOP = "Nop"
GLOBAL_ANCHOR = "GlobalAnchor"
LOCAL_ANCHOR = "LocalAnchor"
ADD = "Add"
SUBTRACT = "Subtract"
MULTIPLY = "Multiply"
DIVIDE = "Divide"
AND = "And"
OR = "Or"
NOT = "Not"
XOR = "Xor"
SHIFT_LEFT = "ShiftLeft"
SHIFT_RIGHT = "ShiftRight"
EQUAL = "Equal"
NOT_EQUAL = "NotEqual"
LESS_THAN = "LessThan"
GREATER_THAN = "GreaterThan"
JUMP_IF_NOT_ZERO = "JumpIfNotZero"
JUMP_IF_ZERO = "JumpIfZero"
TERMINATE = "Terminate"
RAND_UNIFORM = "RandUniform"
RAND_BERNOULLI = "RandBernoulli"
SET_REGULATOR = "SetRegulator"
ADJUST_REGULATOR = "AdjustRegulator"
SENSE_REGULATOR = "SenseRegulator"
CLEAR_REGULATOR = "ClearRegulator"
# block dialect, reference backend only
IF_NOT_ZERO = "IfNotZero"
WHILE = "While"
CLOSE_BLOCK = "CloseBlock"

# --- fixed integer enumeration for the byte-code backend -------------------
# Hot opcodes get the smallest codes; the dispatch chain tests them first.

OP_NOP = 0
OP_ADD = 1
OP_SUBTRACT = 2
OP_MULTIPLY = 3
OP_DIVIDE = 4
OP_GLOBAL_ANCHOR = 5
OP_LOCAL_ANCHOR = 6
OP_AND = 7
OP_OR = 8
OP_NOT = 9
OP_XOR = 10
OP_SHIFT_LEFT = 11
OP_SHIFT_RIGHT = 12
OP_EQUAL = 13
OP_NOT_EQUAL = 14
OP_LESS_THAN = 15
OP_GREATER_THAN = 16
OP_JUMP_IF_NOT_ZERO = 17
OP_JUMP_IF_ZERO = 18
OP_TERMINATE = 19
OP_RAND_UNIFORM = 20
OP_RAND_BERNOULLI = 21
OP_SET_REGULATOR = 22
OP_ADJUST_REGULATOR = 23
OP_SENSE_REGULATOR = 24
OP_CLEAR_REGULATOR = 25

OP_RESPONSE_BASE = 32
MAX_RESPONSES = 32

OPCODE_CODES: dict[str, int] = {
    NOP: OP_NOP,
    ADD: OP_ADD,
    SUBTRACT: OP_SUBTRACT,
    MULTIPLY: OP_MULTIPLY,
    DIVIDE: OP_DIVIDE,
    GLOBAL_ANCHOR: OP_GLOBAL_ANCHOR,
    LOCAL_ANCHOR: OP_LOCAL_ANCHOR,
    AND: OP_AND,
    OR: OP_OR,
    NOT: OP_NOT,
    XOR: OP_XOR,
    SHIFT_LEFT: OP_SHIFT_LEFT,
    SHIFT_RIGHT: OP_SHIFT_RIGHT,
    EQUAL: OP_EQUAL,
    NOT_EQUAL: OP_NOT_EQUAL,
    LESS_THAN: OP_LESS_THAN,
    GREATER_THAN: OP_GREATER_THAN,
    JUMP_IF_NOT_ZERO: OP_JUMP_IF_NOT_ZERO,
    JUMP_IF_ZERO: OP_JUMP_IF_ZERO,
    TERMINATE: OP_TERMINATE,
    RAND_UNIFORM: OP_RAND_UNIFORM,
    RAND_BERNOULLI: OP_RAND_BERNOULLI,
    SET_REGULATOR: OP_SET_REGULATOR,
    ADJUST_REGULATOR: OP_ADJUST_REGULATOR,
    SENSE_REGULATOR: OP_SENSE_REGULATOR,
    CLEAR_REGULATOR: OP_CLEAR_REGULATOR,
}


def response_opcode(k: int) -> str:
    """Canonical spelling of the k-th response instruction."""
    if not 0 <= k < MAX_RESPONSES:
        raise ValueError(f"response index {k} out of range [0, {MAX_RESPONSES})")
    return f"Response{k}"


def response_index(opcode: str) -> int | None:
    """Response index encoded by `opcode`, or None if it is not a response."""
    if opcode.startswith("Response"):
        suffix = opcode[len("Response"):]
        if suffix.isdigit():
            k = int(suffix)
            if 0 <= k < MAX_RESPONSES:
                return k
    return None


def opcode_code(opcode: str) -> int:
    """Fixed integer code for the byte-code backend's dense switch."""
    code = OPCODE_CODES.get(opcode)
    if code is not None:
        return code
    k = response_index(opcode)
    if k is not None:
        return OP_RESPONSE_BASE + k
    raise KeyError(f"unknown opcode {opcode!r}")


# --- opcode families --------------------------------------------------------

ARITHMETIC_OPS = (ADD, SUBTRACT, MULTIPLY, DIVIDE)
BITWISE_OPS = (AND, OR, NOT, XOR, SHIFT_LEFT, SHIFT_RIGHT)
COMPARISON_OPS = (EQUAL, NOT_EQUAL, LESS_THAN, GREATER_THAN)
RNG_OPS = (RAND_UNIFORM, RAND_BERNOULLI)
REGULATION_WRITE_OPS = (SET_REGULATOR, ADJUST_REGULATOR, CLEAR_REGULATOR)
REGULATION_OPS = (SET_REGULATOR, ADJUST_REGULATOR, SENSE_REGULATOR, CLEAR_REGULATOR)
JUMP_OPS = (JUMP_IF_NOT_ZERO, JUMP_IF_ZERO)
BLOCK_OPS = (IF_NOT_ZERO, WHILE, CLOSE_BLOCK)
CONTROL_FLOW_OPS = JUMP_OPS + BLOCK_OPS


# --- named instruction sets -------------------------------------------------


@dataclass(frozen=True)
class InstructionSetSpec:
    """A named, ordered, frozen collection of opcodes."""

    name: str
    opcodes: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.opcodes)) != len(self.opcodes):
            raise ValueError(f"instruction set {self.name!r} has duplicate opcodes")

    def __contains__(self, opcode: str) -> bool:
        return opcode in self.opcodes

    def __len__(self) -> int:
        return len(self.opcodes)


_COMPLETE_EXTRAS = (
    NOP,
    GLOBAL_ANCHOR,
    LOCAL_ANCHOR,
    JUMP_IF_NOT_ZERO,
    JUMP_IF_ZERO,
    TERMINATE,
    AND,
    OR,
    NOT,
    XOR,
    SHIFT_LEFT,
    SHIFT_RIGHT,
    EQUAL,
    NOT_EQUAL,
    LESS_THAN,
    GREATER_THAN,
    RAND_UNIFORM,
    RAND_BERNOULLI,
    SET_REGULATOR,
    ADJUST_REGULATOR,
    SENSE_REGULATOR,
    CLEAR_REGULATOR,
)

NOP_SET = InstructionSetSpec("nop", (NOP,))
ARITHMETIC_SET = InstructionSetSpec("arithmetic", ARITHMETIC_OPS)
COMPLETE_SET = InstructionSetSpec("complete", ARITHMETIC_OPS + _COMPLETE_EXTRAS)
SANS_REGULATION_SET = InstructionSetSpec(
    "sans_regulation",
    tuple(op for op in COMPLETE_SET.opcodes if op not in REGULATION_OPS),
)

# Opcodes whose semantics do not depend on the backend: no control flow.
EQUIVALENCE_SAFE_SET = InstructionSetSpec(
    "equivalence_safe",
    (NOP,) + ARITHMETIC_OPS + BITWISE_OPS + COMPARISON_OPS,
)


def flex_dialect(spec: InstructionSetSpec) -> InstructionSetSpec:
    """Block-structured materialization of a canonical set.

    Jump opcodes are replaced in place by the open/close block trio; sets
    without jumps are returned unchanged.
    """
    if not any(op in JUMP_OPS for op in spec.opcodes):
        return spec
    opcodes: list[str] = []
    for op in spec.opcodes:
        if op == JUMP_IF_NOT_ZERO:
            opcodes.extend((IF_NOT_ZERO, WHILE, CLOSE_BLOCK))
        elif op == JUMP_IF_ZERO:
            continue
        else:
            opcodes.append(op)
    return InstructionSetSpec(f"{spec.name}@flex", tuple(opcodes))


def with_responses(base: InstructionSetSpec, n: int, name: str) -> InstructionSetSpec:
    """Extend `base` with Response0..Response(n-1) under a new name."""
    responses = tuple(response_opcode(k) for k in range(n))
    return register_set(InstructionSetSpec(name, base.opcodes + responses))


_SET_REGISTRY: dict[str, InstructionSetSpec] = {}


def register_set(spec: InstructionSetSpec) -> InstructionSetSpec:
    """Make a set resolvable by name (idempotent for identical definitions)."""
    existing = _SET_REGISTRY.get(spec.name)
    if existing is not None:
        if existing.opcodes != spec.opcodes:
            raise ValueError(f"instruction set name {spec.name!r} already registered differently")
        return existing
    _SET_REGISTRY[spec.name] = spec
    return spec


def resolve_set(name: str) -> InstructionSetSpec:
    spec = _SET_REGISTRY.get(name)
    if spec is None:
        raise KeyError(f"unknown instruction set {name!r}")
    return spec


for _spec in (NOP_SET, ARITHMETIC_SET, COMPLETE_SET, SANS_REGULATION_SET, EQUIVALENCE_SAFE_SET):
    register_set(_spec)
    register_set(flex_dialect(_spec))


# --- numeric conventions shared by both backends ----------------------------

_MASK64 = (1 << 64) - 1
_SIGN64 = 1 << 63
_INF = float("inf")


def wrap_i64(v: int) -> int:
    """Wrap an arbitrary int into two's-complement signed 64-bit range."""
    return ((v + _SIGN64) & _MASK64) - _SIGN64


def to_i64(x: float) -> int:
    """Register value as a signed 64-bit integer: truncate toward zero, non-finite -> 0."""
    if x != x or x == _INF or x == -_INF:
        return 0
    return wrap_i64(int(x))
