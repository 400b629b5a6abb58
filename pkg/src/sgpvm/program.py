"""Instructions, programs, module extraction, and the text genome format.

A program is a flat instruction sequence. GlobalAnchor instructions split it
into modules: each module starts at its anchor and runs to the next anchor
(the last one runs to the end). A program with no anchors is one implicit
module tagged with the all-zeros tag, so anchor-free benchmark programs
still execute.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from . import isa
from .rng import Xorshift64Star
from .tags import Tag, ZERO_TAG, tag_from_hex, tag_to_hex

REGISTER_COUNT = 8

GENOME_FORMAT = "sgpvm-genome"
GENOME_VERSION = "v1"
_HEADER_RE = re.compile(r"^sgpvm-genome v1 set=(\S+) regs=(\d+)$")


class GenomeParseError(ValueError):
    """Malformed genome text; `line` is the 1-based offending line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class GenomeValidationError(ValueError):
    """Well-formed genome that violates the declared instruction set or layout."""


@dataclass(frozen=True, slots=True)
class Instruction:
    opcode: str
    a: int
    b: int
    c: int
    tag: Tag


class Program:
    """Immutable instruction sequence with its derived module table.

    `set_name` records which instruction set the program was generated
    against; it is carried into genome headers.
    """

    def __init__(self, instructions: Iterable[Instruction], set_name: str):
        self.instructions: tuple[Instruction, ...] = tuple(instructions)
        self.set_name = set_name
        self.modules: tuple[tuple[int, Tag], ...] = tuple(extract_modules(self.instructions))
        self._lite_code = None  # filled lazily by the byte-code backend

    def __len__(self) -> int:
        return len(self.instructions)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Program):
            return NotImplemented
        return self.instructions == other.instructions and self.set_name == other.set_name

    def __hash__(self) -> int:
        return hash((self.instructions, self.set_name))

    def __repr__(self) -> str:
        return f"Program({len(self.instructions)} instructions, {len(self.modules)} modules, set={self.set_name!r})"

    def module_span(self, index: int) -> tuple[int, int]:
        """Half-open [start, end) instruction range of module `index`."""
        start = self.modules[index][0]
        if index + 1 < len(self.modules):
            return start, self.modules[index + 1][0]
        return start, len(self.instructions)

    @property
    def module_tags(self) -> tuple[Tag, ...]:
        return tuple(tag for _, tag in self.modules)


def extract_modules(instructions: Sequence[Instruction]) -> list[tuple[int, Tag]]:
    """(start index, tag) for every GlobalAnchor, or one zero-tagged module."""
    table = [
        (i, inst.tag)
        for i, inst in enumerate(instructions)
        if inst.opcode == isa.GLOBAL_ANCHOR
    ]
    if not table:
        return [(0, ZERO_TAG)]
    return table


def random_instruction(set_spec: isa.InstructionSetSpec, rng: Xorshift64Star) -> Instruction:
    """One instruction drawn uniformly: opcode, then operands a/b/c, then tag."""
    opcode = set_spec.opcodes[rng.below(len(set_spec.opcodes))]
    a = rng.below(REGISTER_COUNT)
    b = rng.below(REGISTER_COUNT)
    c = rng.below(REGISTER_COUNT)
    tag = rng.next_u64()
    return Instruction(opcode, a, b, c, tag)


def random_program(set_spec: isa.InstructionSetSpec, length: int, rng: Xorshift64Star) -> Program:
    if length < 0:
        raise ValueError("length must be >= 0")
    if length > 0 and len(set_spec) == 0:
        raise ValueError(f"instruction set {set_spec.name!r} is empty")
    return Program((random_instruction(set_spec, rng) for _ in range(length)), set_spec.name)


def serialize(program: Program) -> str:
    """Text genome: header line, then one `opcode a b c tag-hex` line per instruction."""
    lines = [f"{GENOME_FORMAT} {GENOME_VERSION} set={program.set_name} regs={REGISTER_COUNT}"]
    for inst in program.instructions:
        lines.append(f"{inst.opcode} {inst.a} {inst.b} {inst.c} {tag_to_hex(inst.tag)}")
    return "\n".join(lines) + "\n"


def deserialize(text: str, set_spec: isa.InstructionSetSpec | None = None) -> Program:
    """Parse a text genome, validating opcodes against the declared set.

    When `set_spec` is given it overrides registry lookup of the header's
    set name (the header name is still recorded on the program).
    """
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise GenomeParseError(1, "empty genome (missing header)")

    m = _HEADER_RE.match(lines[0])
    if m is None:
        raise GenomeParseError(1, f"bad header {lines[0]!r}")
    set_name = m.group(1)
    regs = int(m.group(2))
    if regs != REGISTER_COUNT:
        raise GenomeValidationError(
            f"genome declares {regs} registers; this build supports {REGISTER_COUNT}"
        )
    if set_spec is None:
        try:
            set_spec = isa.resolve_set(set_name)
        except KeyError as e:
            raise GenomeValidationError(str(e)) from None

    instructions = []
    for n, line in enumerate(lines[1:], start=2):
        fields = line.split(" ")
        if len(fields) != 5:
            raise GenomeParseError(n, f"expected 5 fields, got {len(fields)}")
        opcode, a_s, b_s, c_s, tag_s = fields
        if not (a_s.isdigit() and b_s.isdigit() and c_s.isdigit()):
            raise GenomeParseError(n, "operands must be non-negative integers")
        a, b, c = int(a_s), int(b_s), int(c_s)
        try:
            tag = tag_from_hex(tag_s)
        except ValueError as e:
            raise GenomeParseError(n, str(e)) from None
        if opcode not in set_spec:
            raise GenomeValidationError(
                f"line {n}: opcode {opcode!r} not in instruction set {set_spec.name!r}"
            )
        if not (a < regs and b < regs and c < regs):
            raise GenomeValidationError(f"line {n}: operand index out of range [0, {regs})")
        instructions.append(Instruction(opcode, a, b, c, tag))
    return Program(instructions, set_name)
