"""Deterministic 64-bit PRNG shared by every component.

All randomness in the engine flows through Xorshift64Star so that both
interpreter backends, program generation, mutation, and the evolutionary
loop produce identical draw sequences for identical seeds, on any platform.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1

_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
_SEED_CHAIN_INIT = 0x5EED5EED5EED5EED


def splitmix64(x: int) -> int:
    """One SplitMix64 step: maps any 64-bit value to a well-mixed 64-bit value."""
    x = (x + _SPLITMIX_GAMMA) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def mix_seeds(*parts: int) -> int:
    """Fold integer components into one seed.

    Used to derive independent, reproducible streams, e.g. per
    (master seed, generation, individual index).
    """
    acc = _SEED_CHAIN_INIT
    for p in parts:
        acc = splitmix64((acc ^ (p & MASK64)) & MASK64)
    return acc


class Xorshift64Star:
    """xorshift64* generator seeded through SplitMix64.

    `draws` counts every 64-bit extraction; opcode-level tests rely on it
    to verify exactly which instructions consume randomness.
    """

    __slots__ = ("_state", "draws")

    def __init__(self, seed: int):
        state = splitmix64(seed & MASK64)
        # xorshift state must be nonzero
        self._state = state if state != 0 else _SPLITMIX_GAMMA
        self.draws = 0

    def next_u64(self) -> int:
        s = self._state
        s ^= s >> 12
        s = (s ^ (s << 25)) & MASK64
        s ^= s >> 27
        self._state = s
        self.draws += 1
        return (s * 0x2545F4914F6CDD1D) & MASK64

    def uniform(self) -> float:
        """Next float in [0, 1), from the top 53 bits of one draw."""
        return (self.next_u64() >> 11) * 2.0**-53

    def below(self, n: int) -> int:
        """Uniform integer in [0, n). One draw; modulo bias is negligible for small n."""
        if n <= 0:
            raise ValueError("below() requires n >= 1")
        return self.next_u64() % n

    def getstate(self) -> tuple[int, int]:
        return (self._state, self.draws)
