"""Seed fan-out: one master seed, independent streams per stage and cell."""

from __future__ import annotations

_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def _tag(s: str) -> int:
    h = 0
    for ch in s.encode():
        h = splitmix64(h ^ ch)
    return h


def derive_seed(master: int, *path: int | str) -> int:
    """Mix ``master`` with a path of ints/strings into a 63-bit seed.

    ``derive_seed(s, "damage", 2, 0)`` names the damage stream of rate index 2,
    sample 0. Different paths give unrelated seeds.
    """
    h = splitmix64(master & _MASK)
    for part in path:
        v = _tag(part) if isinstance(part, str) else int(part) & _MASK
        h = splitmix64(h ^ v)
    return h >> 1
