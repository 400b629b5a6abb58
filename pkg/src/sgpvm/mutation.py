"""Mutation operators over programs, plus ancestor construction.

Per-site Bernoulli events are sampled by geometric gap skipping, which
reproduces the exact iid per-site distribution while drawing far fewer
random numbers than one draw per site.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

from . import isa
from .program import Instruction, Program, REGISTER_COUNT, random_instruction, random_program
from .rng import Xorshift64Star
from .tags import TAG_WIDTH


@dataclass(frozen=True)
class MutationConfig:
    tag_bit_flip_rate: float = 0.002
    opcode_sub_rate: float = 0.005
    operand_sub_rate: float = 0.005
    insertion_rate: float = 0.005
    deletion_rate: float = 0.005
    max_length: int = 256

    def __post_init__(self):
        for name in ("tag_bit_flip_rate", "opcode_sub_rate", "operand_sub_rate",
                     "insertion_rate", "deletion_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.max_length < 1:
            raise ValueError("max_length must be >= 1")


def _bernoulli_sites(n: int, p: float, rng: Xorshift64Star) -> Iterator[int]:
    """Indices in [0, n) hit by iid Bernoulli(p), in increasing order."""
    if n <= 0 or p <= 0.0:
        return
    if p >= 1.0:
        yield from range(n)
        return
    log1mp = math.log1p(-p)
    pos = -1
    while True:
        gap = int(math.log1p(-rng.uniform()) / log1mp) + 1
        pos += gap
        if pos >= n:
            return
        yield pos


def mutate(
    program: Program,
    cfg: MutationConfig,
    set_spec: isa.InstructionSetSpec,
    rng: Xorshift64Star,
) -> Program:
    """Mutated copy of `program`; the input is never modified.

    Applied in order: per-bit tag flips, per-instruction opcode then operand
    resampling, per-site insertion, per-site deletion. The result length is
    clamped to [1, max_length].
    """
    genome = list(program.instructions)

    # tag bit flips over the flattened bit string
    for site in _bernoulli_sites(len(genome) * TAG_WIDTH, cfg.tag_bit_flip_rate, rng):
        idx, bit = divmod(site, TAG_WIDTH)
        inst = genome[idx]
        genome[idx] = Instruction(inst.opcode, inst.a, inst.b, inst.c, inst.tag ^ (1 << bit))

    for idx in _bernoulli_sites(len(genome), cfg.opcode_sub_rate, rng):
        inst = genome[idx]
        opcode = set_spec.opcodes[rng.below(len(set_spec.opcodes))]
        genome[idx] = Instruction(opcode, inst.a, inst.b, inst.c, inst.tag)

    for idx in _bernoulli_sites(len(genome), cfg.operand_sub_rate, rng):
        inst = genome[idx]
        a = rng.below(REGISTER_COUNT)
        b = rng.below(REGISTER_COUNT)
        c = rng.below(REGISTER_COUNT)
        genome[idx] = Instruction(inst.opcode, a, b, c, inst.tag)

    insert_at = list(_bernoulli_sites(len(genome), cfg.insertion_rate, rng))
    for idx in reversed(insert_at):
        genome.insert(idx, random_instruction(set_spec, rng))

    delete_at = list(_bernoulli_sites(len(genome), cfg.deletion_rate, rng))
    if len(delete_at) >= len(genome):
        genome = genome[:1]  # deletions never empty the genome
    else:
        for idx in reversed(delete_at):
            del genome[idx]

    if len(genome) > cfg.max_length:
        genome = genome[: cfg.max_length]
    return Program(genome, program.set_name)


def make_ancestor(
    set_spec: isa.InstructionSetSpec,
    length: int,
    anchors: int,
    rng: Xorshift64Star,
) -> Program:
    """Random program of `length` instructions with `anchors` evenly spaced
    randomly tagged GlobalAnchors overwritten onto it."""
    if anchors < 0 or anchors > length:
        raise ValueError("anchor count must be in [0, length]")
    base = list(random_program(set_spec, length, rng).instructions)
    for k in range(anchors):
        pos = k * length // anchors
        base[pos] = Instruction(isa.GLOBAL_ANCHOR, 0, 0, 0, rng.next_u64())
    return Program(base, set_spec.name)
