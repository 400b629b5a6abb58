"""Population management, selection schemes, and the generation loop.

Two reproduction schemes: elite(1) + roulette(N-1) with the elite copied
unmutated, and N-way lexicase over binary case vectors. Runs halt at the
first generation containing a perfect individual. Every random decision
derives from (seed, stream, generation, index), so runs replay bit-exactly
and per-individual evaluation could be parallelized without changing
results.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .mutation import MutationConfig, make_ancestor, mutate
from .problems import (
    ChangingEnvConfig,
    ContextualSignalConfig,
    eval_changing_environment,
    eval_contextual_signal,
)
from .program import Program
from .rng import Xorshift64Star, mix_seeds

_INIT_STREAM = 0x1417
_EVAL_STREAM = 0xE7A1
_SELECT_STREAM = 0x5E1E
_MUTATE_STREAM = 0x3A7A

SELECTION_SCHEMES = ("elite_roulette", "lexicase")


def elite_select(fitnesses: Sequence[float]) -> int:
    """Index of the best individual; ties go to the lowest index."""
    if not fitnesses:
        raise ValueError("elite_select on an empty population")
    best = 0
    best_f = fitnesses[0]
    for i in range(1, len(fitnesses)):
        if fitnesses[i] > best_f:
            best = i
            best_f = fitnesses[i]
    return best


def roulette_select(fitnesses: Sequence[float], rng: Xorshift64Star) -> int:
    """Fitness-proportional draw; a zero-sum population falls back to uniform."""
    if not fitnesses:
        raise ValueError("roulette_select on an empty population")
    total = 0.0
    for f in fitnesses:
        if f < 0:
            raise ValueError(f"roulette_select requires non-negative fitness, got {f}")
        total += f
    if total == 0.0:
        return rng.below(len(fitnesses))
    r = rng.uniform() * total
    acc = 0.0
    for i, f in enumerate(fitnesses):
        acc += f
        if r < acc:
            return i
    return len(fitnesses) - 1  # guard against float accumulation shortfall


def _lexicase_pool(case_scores: Sequence[Sequence[int]], order: Sequence[int]) -> list[int]:
    """Survivors after filtering candidates through cases in `order`."""
    pool = list(range(len(case_scores)))
    for case in order:
        best = max(case_scores[i][case] for i in pool)
        pool = [i for i in pool if case_scores[i][case] == best]
        if len(pool) == 1:
            break
    return pool


def lexicase_select(case_scores: Sequence[Sequence[int]], rng: Xorshift64Star) -> int:
    """Filter through cases in a uniformly shuffled order, keeping only
    case-elite candidates; pick uniformly among the survivors."""
    if not case_scores:
        raise ValueError("lexicase_select on an empty population")
    n_cases = len(case_scores[0])
    if n_cases < 1 or any(len(v) != n_cases for v in case_scores):
        raise ValueError("all individuals need the same nonzero case count")
    order = list(range(n_cases))
    for i in range(n_cases - 1, 0, -1):
        j = rng.below(i + 1)
        order[i], order[j] = order[j], order[i]
    pool = _lexicase_pool(case_scores, order)
    if len(pool) == 1:
        return pool[0]
    return pool[rng.below(len(pool))]


@dataclass(frozen=True)
class GenerationRecord:
    generation: int
    max_fitness: float
    mean_fitness: float
    solved: bool


@dataclass
class EvolutionResult:
    history: list[GenerationRecord]
    population: list[Program]
    fitnesses: list[float]
    solved_at: Optional[int]


@dataclass(frozen=True)
class EvolutionSetup:
    """Everything a single replicate needs, independent of file formats."""

    problem: ChangingEnvConfig | ContextualSignalConfig
    population_size: int = 100
    generations: int = 1000
    selection: str = "elite_roulette"
    mutation: MutationConfig = MutationConfig()
    seed: int = 1
    backend: str = "lite"
    ancestor_length: int = 100
    ancestor_anchors: int | None = None

    def __post_init__(self):
        if self.population_size < 1:
            raise ValueError("population size must be >= 1")
        if self.generations < 0:
            raise ValueError("generation cap must be >= 0")
        if self.selection not in SELECTION_SCHEMES:
            raise ValueError(f"unknown selection scheme {self.selection!r}")
        if self.ancestor_length < 1:
            raise ValueError("ancestor length must be >= 1")

    def anchors(self) -> int:
        if self.ancestor_anchors is not None:
            return self.ancestor_anchors
        if isinstance(self.problem, ChangingEnvConfig):
            return self.problem.k
        return 2 * 4  # one per contextual signal


def _evaluate(setup: EvolutionSetup, program: Program, seed: int) -> tuple[float, list[int]]:
    if isinstance(setup.problem, ChangingEnvConfig):
        fitness, passed = eval_changing_environment(program, setup.problem, seed, setup.backend)
        return float(fitness), [int(p) for p in passed]
    passed = eval_contextual_signal(program, setup.problem, setup.backend)
    return float(sum(passed)), [int(p) for p in passed]


def run_evolution(
    setup: EvolutionSetup,
    seed: int | None = None,
    initial_population: Sequence[Program] | None = None,
) -> EvolutionResult:
    """Run one replicate: evaluate, record, halt on perfection, else breed.

    `generations` caps the number of breeding rounds, so history holds at
    most generations+1 records. `initial_population` overrides the default
    single-random-ancestor initialization (used to seed known organisms).
    """
    if seed is None:
        seed = setup.seed
    n = setup.population_size
    set_spec = setup.problem.instruction_set
    if initial_population is not None:
        if len(initial_population) != n:
            raise ValueError("initial population size mismatch")
        population = list(initial_population)
    else:
        init_rng = Xorshift64Star(mix_seeds(seed, _INIT_STREAM))
        ancestor = make_ancestor(set_spec, setup.ancestor_length, setup.anchors(), init_rng)
        population = [ancestor] * n

    perfect = float(setup.problem.perfect_fitness)
    history: list[GenerationRecord] = []
    solved_at: Optional[int] = None

    generation = 0
    while True:
        fitnesses: list[float] = []
        cases: list[list[int]] = []
        for i, prog in enumerate(population):
            f, c = _evaluate(setup, prog, mix_seeds(seed, _EVAL_STREAM, generation, i))
            fitnesses.append(f)
            cases.append(c)
        max_f = max(fitnesses)
        solved = max_f >= perfect
        history.append(
            GenerationRecord(generation, max_f, sum(fitnesses) / n, solved)
        )
        if solved:
            solved_at = generation
            break
        if generation >= setup.generations:
            break

        select_rng = Xorshift64Star(mix_seeds(seed, _SELECT_STREAM, generation))
        offspring: list[Program] = []
        if setup.selection == "elite_roulette":
            offspring.append(population[elite_select(fitnesses)])  # elite survives unmutated
            parent_count = n - 1
        else:
            parent_count = n
        for child in range(parent_count):
            if setup.selection == "elite_roulette":
                parent = roulette_select(fitnesses, select_rng)
            else:
                parent = lexicase_select(cases, select_rng)
            child_rng = Xorshift64Star(mix_seeds(seed, _MUTATE_STREAM, generation, child))
            offspring.append(mutate(population[parent], setup.mutation, set_spec, child_rng))
        population = offspring
        generation += 1

    return EvolutionResult(history, population, fitnesses, solved_at)
