"""Ideal-functionality reference used by differential tests.

``z = (number of bins set by any DP) + N - n/2`` with ``N ~ Bin(n, 1/2)``.
When the real protocol runs with a :class:`NoiseSchedule`, every CP takes its
swap bit for slot ``i`` from the schedule, so the noise slot ends up holding
the XOR of the m bits and ``N`` can be computed here exactly.
"""

from __future__ import annotations

import hashlib
import random
import struct
from typing import Iterable, Sequence

from .params import INTERSECTION, UNION


class NoiseSchedule:
    def __init__(self, seed: int | bytes) -> None:
        self.seed = seed if isinstance(seed, bytes) else str(seed).encode()

    def bit(self, slot: int, cp_index: int) -> int:
        h = hashlib.sha256(b"PSC-NOISE" + struct.pack(">I", len(self.seed)) + self.seed
                           + struct.pack(">II", slot, cp_index)).digest()
        return h[0] & 1

    def slot_value(self, slot: int, m: int) -> int:
        v = 0
        for j in range(m):
            v ^= self.bit(slot, j)
        return v

    def noise_count(self, n: int, m: int) -> int:
        """Number of noise slots that end up encrypting 1."""
        return sum(self.slot_value(i, m) for i in range(n))


def union_size(observations: Sequence[Iterable[int]]) -> int:
    out: set = set()
    for obs in observations:
        out |= set(obs)
    return len(out)


def intersection_size(observations: Sequence[Iterable[int]], b: int) -> int:
    sets = [set(o) for o in observations]
    if not sets:
        return b  # every bin is (vacuously) observed by all DPs
    common = sets[0]
    for s in sets[1:]:
        common &= s
    return len(common)


def reference_oracle(observations: Sequence[Iterable[int]], n: int = 0, seed=None, m: int = 1,
                     mode: str = UNION, b: int | None = None) -> int:
    """Noisy set-union (or set-intersection) cardinality.

    With ``seed`` the noise follows :class:`NoiseSchedule` for ``m`` CPs, which
    matches a protocol run using the same schedule.  Without it ``N`` is a
    fresh binomial draw.
    """
    if n % 2:
        raise ValueError("n must be even")
    if seed is not None:
        ones = NoiseSchedule(seed).noise_count(n, m)
    else:
        rng = random.Random()
        ones = sum(rng.getrandbits(1) for _ in range(n))
    if mode == INTERSECTION:
        if b is None:
            raise ValueError("intersection needs the bin count")
        return intersection_size(observations, b) + (n - ones) - n // 2
    return union_size(observations) + ones - n // 2
