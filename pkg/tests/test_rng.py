import pytest

from sgpvm.rng import MASK64, Xorshift64Star, mix_seeds, splitmix64


def test_outputs_are_64_bit():
    rng = Xorshift64Star(123)
    for _ in range(1000):
        v = rng.next_u64()
        assert 0 <= v <= MASK64


def test_same_seed_same_stream():
    a = Xorshift64Star(42)
    b = Xorshift64Star(42)
    assert [a.next_u64() for _ in range(100)] == [b.next_u64() for _ in range(100)]


def test_different_seeds_diverge():
    a = Xorshift64Star(1)
    b = Xorshift64Star(2)
    assert [a.next_u64() for _ in range(10)] != [b.next_u64() for _ in range(10)]


def test_uniform_range_and_draw_count():
    rng = Xorshift64Star(7)
    values = [rng.uniform() for _ in range(10_000)]
    assert all(0.0 <= v < 1.0 for v in values)
    assert rng.draws == 10_000
    # crude mean check: 4 sigma of a uniform sample mean
    mean = sum(values) / len(values)
    assert abs(mean - 0.5) < 4 * (1 / 12) ** 0.5 / 100


def test_below_range():
    rng = Xorshift64Star(9)
    assert all(0 <= rng.below(7) < 7 for _ in range(1000))
    with pytest.raises(ValueError):
        rng.below(0)


def test_zero_seed_works():
    rng = Xorshift64Star(0)
    assert rng.next_u64() != rng.next_u64()


def test_splitmix_mixes_small_inputs():
    outs = {splitmix64(i) for i in range(100)}
    assert len(outs) == 100


def test_mix_seeds_order_sensitive():
    assert mix_seeds(1, 2) != mix_seeds(2, 1)
    assert mix_seeds(5, 0, 3) == mix_seeds(5, 0, 3)
    assert mix_seeds(5, 0, 3) != mix_seeds(5, 0, 4)
