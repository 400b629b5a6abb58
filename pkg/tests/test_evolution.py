import itertools

import pytest

from sgpvm.evolution import (
    EvolutionSetup,
    _lexicase_pool,
    elite_select,
    lexicase_select,
    roulette_select,
    run_evolution,
)
from sgpvm.mutation import MutationConfig
from sgpvm.problems import ChangingEnvConfig, perfect_changing_env_program
from sgpvm.rng import Xorshift64Star


# --- elite ------------------------------------------------------------------

def test_elite_tie_breaks_low_index():
    assert elite_select([3, 7, 7]) == 1


def test_elite_singleton():
    assert elite_select([5]) == 0


def test_elite_empty_rejected():
    with pytest.raises(ValueError):
        elite_select([])


def test_elite_matches_brute_force():
    rng = Xorshift64Star(1)
    for _ in range(1000):
        n = 1 + rng.below(20)
        fits = [rng.uniform() for _ in range(n)]
        got = elite_select(fits)
        # independent linear scan
        best = 0
        for i in range(1, n):
            if fits[i] > fits[best]:
                best = i
        assert got == best


# --- roulette ---------------------------------------------------------------

def test_roulette_all_mass_on_one():
    rng = Xorshift64Star(2)
    assert all(roulette_select([0, 0, 5], rng) == 2 for _ in range(100))


def test_roulette_zero_sum_uniform():
    rng = Xorshift64Star(3)
    counts = [0] * 4
    n = 10_000
    for _ in range(n):
        counts[roulette_select([0.0, 0.0, 0.0, 0.0], rng)] += 1
    sigma = (n * 0.25 * 0.75) ** 0.5
    for c in counts:
        assert abs(c - n / 4) < 4 * sigma


def test_roulette_proportional():
    rng = Xorshift64Star(4)
    n = 10_000
    hits = sum(roulette_select([1.0, 3.0], rng) for _ in range(n))
    sigma = (n * 0.75 * 0.25) ** 0.5
    assert abs(hits - 0.75 * n) < 4 * sigma


def test_roulette_rejects_negative():
    with pytest.raises(ValueError):
        roulette_select([1.0, -0.5], Xorshift64Star(5))


def test_roulette_empty_rejected():
    with pytest.raises(ValueError):
        roulette_select([], Xorshift64Star(6))


# --- lexicase ---------------------------------------------------------------

def test_lexicase_dominant_always_wins_exhaustive():
    # 3 individuals, 2 cases; individual 0 is elite on every case
    scores = [[1, 1], [0, 0], [0, 0]]
    for order in itertools.permutations(range(2)):
        assert _lexicase_pool(scores, order) == [0]
    rng = Xorshift64Star(7)
    assert all(lexicase_select(scores, rng) == 0 for _ in range(1000))


def test_lexicase_identical_scores_uniform():
    scores = [[1, 0, 1]] * 5
    rng = Xorshift64Star(8)
    n = 10_000
    counts = [0] * 5
    for _ in range(n):
        counts[lexicase_select(scores, rng)] += 1
    sigma = (n * 0.2 * 0.8) ** 0.5
    for c in counts:
        assert abs(c - n / 5) < 4 * sigma


def test_lexicase_single_case_uniform_among_elite():
    scores = [[1], [0], [1], [0]]
    rng = Xorshift64Star(9)
    n = 10_000
    counts = [0, 0, 0, 0]
    for _ in range(n):
        counts[lexicase_select(scores, rng)] += 1
    assert counts[1] == 0 and counts[3] == 0
    sigma = (n * 0.25) ** 0.5
    assert abs(counts[0] - n / 2) < 4 * sigma


def test_lexicase_validates_input():
    with pytest.raises(ValueError):
        lexicase_select([], Xorshift64Star(10))
    with pytest.raises(ValueError):
        lexicase_select([[1, 0], [1]], Xorshift64Star(11))


def test_lexicase_filters_in_order():
    # case 0 keeps {0,1}; case 1 then keeps {0}
    scores = [[1, 1], [1, 0], [0, 1]]
    assert _lexicase_pool(scores, [0, 1]) == [0]
    assert _lexicase_pool(scores, [1, 0]) == [0]


# --- generation loop --------------------------------------------------------

def tiny_setup(**kw):
    problem = ChangingEnvConfig.from_seed(2, seed=99, cycles_per_signal=32)
    defaults = dict(
        problem=problem,
        population_size=10,
        generations=3,
        selection="elite_roulette",
        mutation=MutationConfig(),
        seed=5,
        ancestor_length=20,
    )
    defaults.update(kw)
    return EvolutionSetup(**defaults)


def test_generation_cap_zero_evaluates_once():
    result = run_evolution(tiny_setup(generations=0))
    assert len(result.history) == 1
    assert result.history[0].generation == 0


def test_perfect_seed_solves_at_generation_zero():
    setup = tiny_setup()
    perfect = perfect_changing_env_program(setup.problem)
    result = run_evolution(setup, initial_population=[perfect] * 10)
    assert result.solved_at == 0
    assert result.history[0].solved


def test_halt_on_perfect_fires_no_later():
    setup = tiny_setup(generations=50)
    result = run_evolution(setup)
    if result.solved_at is not None:
        assert result.history[-1].generation == result.solved_at
        assert all(not rec.solved for rec in result.history[:-1])


def test_identical_seeds_identical_histories():
    a = run_evolution(tiny_setup(generations=5))
    b = run_evolution(tiny_setup(generations=5))
    assert a.history == b.history
    assert a.population == b.population


def test_elite_copied_unmutated():
    # with mutation disabled every child equals its parent; the elite slot
    # must hold exactly the previous generation's best program
    setup = tiny_setup(generations=1, mutation=MutationConfig(0, 0, 0, 0, 0, 256))
    first = run_evolution(tiny_setup(generations=0))
    best = first.population[elite_select(first.fitnesses)]
    result = run_evolution(setup)
    if result.solved_at is None and len(result.history) > 1:
        assert result.population[0] == best


def test_history_generations_strictly_increasing():
    result = run_evolution(tiny_setup(generations=10))
    gens = [rec.generation for rec in result.history]
    assert gens == sorted(set(gens))


def test_lexicase_scheme_runs():
    from sgpvm.problems import ContextualSignalConfig

    problem = ContextualSignalConfig.from_seed(3, cycles_per_signal=16)
    setup = EvolutionSetup(
        problem=problem, population_size=8, generations=2,
        selection="lexicase", mutation=MutationConfig(), seed=6,
        ancestor_length=30,
    )
    result = run_evolution(setup)
    assert len(result.history) >= 1
    assert all(0 <= rec.max_fitness <= 16 for rec in result.history)


def test_invalid_setup_rejected():
    with pytest.raises(ValueError):
        tiny_setup(population_size=0)
    with pytest.raises(ValueError):
        tiny_setup(selection="tournament")
    with pytest.raises(ValueError):
        tiny_setup(generations=-1)
