"""Tags, similarity scoring, regulated module selection, and the match cache.

Tags are plain 64-bit ints. Similarity is normalized Hamming agreement, so
scores are always an exact multiple of 1/64. Module selection adds a
per-module regulation offset to the raw score; any regulator write clears
the cache that memoizes selections.
"""

from __future__ import annotations

from typing import Optional, Sequence

from .rng import MASK64, Xorshift64Star

TAG_WIDTH = 64
ZERO_TAG = 0

Tag = int


def random_tag(rng: Xorshift64Star) -> Tag:
    return rng.next_u64()


def complement(tag: Tag) -> Tag:
    return tag ^ MASK64


def tag_to_hex(tag: Tag) -> str:
    return format(tag & MASK64, "016x")


def tag_from_hex(text: str) -> Tag:
    if len(text) != 16 or text != text.lower():
        raise ValueError(f"tag must be 16 lowercase hex digits, got {text!r}")
    return int(text, 16)


def match_score(a: Tag, b: Tag) -> float:
    """Similarity in [0, 1]: fraction of the 64 bit positions that agree."""
    return (TAG_WIDTH - ((a ^ b) & MASK64).bit_count()) / TAG_WIDTH


class MatchCache:
    """Memoizes regulated best-match lookups for one agent.

    `generation` counts invalidations; it only moves when a regulator is
    written, which is exactly what the regulation-free benchmark isolates.
    """

    __slots__ = ("_entries", "generation")

    def __init__(self):
        self._entries: dict[Tag, Optional[int]] = {}
        self.generation = 0

    def invalidate(self) -> None:
        self._entries.clear()
        self.generation += 1

    def __len__(self) -> int:
        return len(self._entries)


class RegulationState:
    """Per-module regulation offsets for one agent.

    Every write (set/adjust/clear) invalidates the bound MatchCache, keeping
    cached selections consistent with the current offsets. Values are kept
    finite: a non-finite write is stored as 0.0.
    """

    __slots__ = ("_values", "_cache")

    def __init__(self, module_count: int, cache: MatchCache | None = None):
        self._values = [0.0] * module_count
        self._cache = cache

    def __len__(self) -> int:
        return len(self._values)

    def __getitem__(self, i: int) -> float:
        return self._values[i]

    def values(self) -> tuple[float, ...]:
        return tuple(self._values)

    @staticmethod
    def _finite(v: float) -> float:
        return v if v == v and v != float("inf") and v != float("-inf") else 0.0

    def set(self, i: int, v: float) -> None:
        self._values[i] = self._finite(v)
        if self._cache is not None:
            self._cache.invalidate()

    def adjust(self, i: int, delta: float) -> None:
        self._values[i] = self._finite(self._values[i] + delta)
        if self._cache is not None:
            self._cache.invalidate()

    def clear(self, i: int) -> None:
        self._values[i] = 0.0
        if self._cache is not None:
            self._cache.invalidate()


def best_match(
    query: Tag,
    module_tags: Sequence[Tag],
    reg: Sequence[float],
    min_raw: float = 0.0,
) -> Optional[int]:
    """Index of the module maximizing raw score + regulation offset.

    Modules whose raw score falls below `min_raw` are not considered. Ties
    go to the lowest index. Returns None when nothing qualifies.
    """
    if len(module_tags) != len(reg):
        raise ValueError(
            f"module tags ({len(module_tags)}) and regulators ({len(reg)}) differ in length"
        )
    best = None
    best_eff = 0.0
    for i, tag in enumerate(module_tags):
        raw = (TAG_WIDTH - ((query ^ tag) & MASK64).bit_count()) / TAG_WIDTH
        if raw < min_raw:
            continue
        eff = raw + reg[i]
        if best is None or eff > best_eff:
            best = i
            best_eff = eff
    return best


_MISS = object()


def cached_best_match(
    query: Tag,
    cache: MatchCache,
    module_tags: Sequence[Tag],
    reg: Sequence[float],
    min_raw: float = 0.0,
) -> Optional[int]:
    """best_match memoized through `cache`; identical results on hit and miss."""
    hit = cache._entries.get(query, _MISS)
    if hit is not _MISS:
        return hit
    result = best_match(query, module_tags, reg, min_raw)
    cache._entries[query] = result
    return result
