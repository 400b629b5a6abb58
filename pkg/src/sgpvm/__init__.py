"""sgpvm: event-driven linear genetic programming with tag-addressed modules.

Programs are flat instruction sequences split into modules by global
anchors. Environmental signals launch cores on the module whose tag best
matches, optionally biased by runtime regulation. Two interchangeable
backends execute the same semantics: an optimized byte-code interpreter
("lite") and a reference handler-table interpreter ("flex").
"""

__version__ = "0.1.0"

from .cpu import FlexConfig, VirtualCpu, run_equivalence_trace
from .evolution import (
    EvolutionSetup,
    elite_select,
    lexicase_select,
    roulette_select,
    run_evolution,
)
from .isa import (
    ARITHMETIC_SET,
    COMPLETE_SET,
    EQUIVALENCE_SAFE_SET,
    NOP_SET,
    SANS_REGULATION_SET,
    InstructionSetSpec,
    flex_dialect,
    resolve_set,
)
from .mutation import MutationConfig, make_ancestor, mutate
from .problems import (
    ChangingEnvConfig,
    ContextualSignalConfig,
    eval_changing_environment,
    eval_contextual_signal,
    perfect_changing_env_program,
    regulation_demo_program,
)
from .program import Instruction, Program, deserialize, random_program, serialize
from .rng import Xorshift64Star, mix_seeds
from .tags import MatchCache, RegulationState, best_match, cached_best_match, match_score

__all__ = [
    "__version__",
    "ARITHMETIC_SET",
    "COMPLETE_SET",
    "ChangingEnvConfig",
    "ContextualSignalConfig",
    "EQUIVALENCE_SAFE_SET",
    "EvolutionSetup",
    "FlexConfig",
    "Instruction",
    "InstructionSetSpec",
    "MatchCache",
    "MutationConfig",
    "NOP_SET",
    "Program",
    "RegulationState",
    "SANS_REGULATION_SET",
    "VirtualCpu",
    "Xorshift64Star",
    "best_match",
    "cached_best_match",
    "deserialize",
    "elite_select",
    "eval_changing_environment",
    "eval_contextual_signal",
    "flex_dialect",
    "lexicase_select",
    "make_ancestor",
    "match_score",
    "mix_seeds",
    "mutate",
    "perfect_changing_env_program",
    "random_program",
    "regulation_demo_program",
    "resolve_set",
    "roulette_select",
    "run_equivalence_trace",
    "run_evolution",
    "serialize",
]
