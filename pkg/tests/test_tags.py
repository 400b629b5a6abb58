import pytest

from sgpvm.rng import Xorshift64Star
from sgpvm.tags import (
    MatchCache,
    RegulationState,
    best_match,
    cached_best_match,
    complement,
    match_score,
    random_tag,
    tag_from_hex,
    tag_to_hex,
)


def flip_bits(tag, positions):
    for p in positions:
        tag ^= 1 << p
    return tag


def test_identical_tags_score_one():
    rng = Xorshift64Star(1)
    t = random_tag(rng)
    assert match_score(t, t) == 1.0


def test_complement_scores_zero():
    rng = Xorshift64Star(2)
    t = random_tag(rng)
    assert match_score(t, complement(t)) == 0.0


def test_sixteen_bit_difference_scores_three_quarters():
    t = 0
    u = flip_bits(t, range(16))
    # oracle: popcount of the xor
    assert bin(t ^ u).count("1") == 16
    assert match_score(t, u) == 0.75


def test_score_symmetric_and_quantized():
    rng = Xorshift64Star(3)
    for _ in range(500):
        a, b = random_tag(rng), random_tag(rng)
        s = match_score(a, b)
        assert s == match_score(b, a)
        assert 0.0 <= s <= 1.0
        assert s * 64 == int(s * 64)  # always an exact multiple of 1/64


def test_hex_round_trip():
    rng = Xorshift64Star(4)
    for _ in range(100):
        t = random_tag(rng)
        assert tag_from_hex(tag_to_hex(t)) == t
    with pytest.raises(ValueError):
        tag_from_hex("ABCDEF0123456789")  # uppercase rejected
    with pytest.raises(ValueError):
        tag_from_hex("123")


def test_best_match_exact_wins():
    rng = Xorshift64Star(5)
    t = random_tag(rng)
    assert best_match(t, [t, complement(t)], [0.0, 0.0]) == 0


def test_best_match_empty_returns_none():
    assert best_match(0, [], []) is None


def test_best_match_regulation_offsets():
    # raw scores 58/64 and 38/64; +0.5 on the weaker one flips the winner
    q = 0
    near = flip_bits(q, range(6))
    far = flip_bits(q, range(26))
    assert best_match(q, [near, far], [0.0, 0.0]) == 0
    scores = (match_score(q, near), match_score(q, far) + 0.5)
    assert scores[1] > scores[0]
    assert best_match(q, [near, far], [0.0, 0.5]) == 1


def test_best_match_tie_breaks_low_index():
    t = 12345
    assert best_match(t, [t, t, t], [0.0, 0.0, 0.0]) == 0


def test_best_match_min_raw_excludes():
    q = 0
    far = flip_bits(q, range(40))
    assert best_match(q, [far], [0.0], min_raw=0.9) is None
    # regulation cannot rescue a module below the raw threshold
    assert best_match(q, [far], [10.0], min_raw=0.9) is None


def test_best_match_length_mismatch_raises():
    with pytest.raises(ValueError):
        best_match(0, [1, 2], [0.0])


def test_appending_weaker_modules_keeps_winner():
    rng = Xorshift64Star(6)
    for _ in range(50):
        q = random_tag(rng)
        tags = [random_tag(rng) for _ in range(4)]
        reg = [0.0] * 4
        winner = best_match(q, tags, reg)
        win_eff = match_score(q, tags[winner])
        # append modules repressed strictly below the winner
        tags2 = tags + [random_tag(rng) for _ in range(3)]
        reg2 = reg + [win_eff - match_score(q, t) - 0.25 for t in tags2[4:]]
        assert best_match(q, tags2, reg2) == winner


def test_regulation_writes_invalidate_cache():
    cache = MatchCache()
    reg = RegulationState(2, cache)
    tags = [0, complement(0)]
    assert cached_best_match(5, cache, tags, reg) == best_match(5, tags, reg)
    gen = cache.generation
    assert cached_best_match(5, cache, tags, reg) == 0  # hit, no recompute path change
    reg.set(1, 2.0)
    assert cache.generation == gen + 1
    assert len(cache) == 0
    assert cached_best_match(5, cache, tags, reg) == 1  # recomputed under new offsets


def test_sense_style_read_does_not_invalidate():
    cache = MatchCache()
    reg = RegulationState(3, cache)
    _ = reg[1]
    _ = reg.values()
    assert cache.generation == 0


def test_regulation_sanitizes_non_finite():
    reg = RegulationState(1)
    reg.set(0, float("inf"))
    assert reg[0] == 0.0
    reg.set(0, 1e308)
    reg.adjust(0, 1e308)  # overflows to inf, stored as 0.0
    assert reg[0] == 0.0


def test_cached_matches_oracle_under_interleaving():
    rng = Xorshift64Star(7)
    tags = [random_tag(rng) for _ in range(8)]
    cache = MatchCache()
    reg = RegulationState(8, cache)
    shadow = [0.0] * 8
    for step in range(1000):
        if rng.below(4) == 0:
            i = rng.below(8)
            v = (rng.uniform() - 0.5) * 2
            reg.set(i, v)
            shadow[i] = v
        q = random_tag(rng)
        assert cached_best_match(q, cache, tags, reg) == best_match(q, tags, shadow)
