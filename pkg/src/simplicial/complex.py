"""Finite abstract simplicial complexes with deterministic indexing.

Simplices are tuples of strictly increasing non-negative integers. Within a
dimension, simplices are ordered lexicographically; that order fixes every
row/column order used downstream (coboundaries, Laplacians, cochains).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence, TextIO, Union

import numpy as np

Simplex = tuple[int, ...]

#: Sentinel returned by :func:`simplicial_distance` for disconnected simplices.
INFINITY = math.inf


def canonical(vertices: Iterable[int]) -> Simplex:
    """Return the sorted tuple form of a vertex collection.

    Raises ``ValueError`` for empty input, duplicate or negative vertex ids.
    """
    verts = [int(v) for v in vertices]
    if not verts:
        raise ValueError("a simplex needs at least one vertex")
    simplex = tuple(sorted(verts))
    if len(set(simplex)) != len(simplex):
        raise ValueError(f"duplicate vertices in {simplex}")
    if simplex[0] < 0:
        raise ValueError(f"vertex ids must be non-negative, got {simplex}")
    return simplex


def faces(simplex: Sequence[int]) -> list[Simplex]:
    """Codimension-one faces, the i-th omitting the i-th vertex.

    A vertex has no stored faces, so the result is empty for dimension 0.
    """
    simplex = tuple(simplex)
    if len(simplex) <= 1:
        return []
    return [simplex[:i] + simplex[i + 1:] for i in range(len(simplex))]


class SimplicialComplex:
    """Immutable simplicial complex.

    ``simplices[p]`` is the lexicographically sorted list of p-simplices and
    ``index[s]`` is ``(p, position)``. Build one with :meth:`from_simplices`
    or grow one with :func:`insert_closure`.
    """

    __slots__ = ("simplices", "index", "_cofaces")

    def __init__(self, simplices: Sequence[Sequence[Simplex]] = ()):
        levels = [sorted(set(level)) for level in simplices]
        while levels and not levels[-1]:
            levels.pop()
        self.simplices: tuple[tuple[Simplex, ...], ...] = tuple(tuple(lv) for lv in levels)
        self.index: dict[Simplex, tuple[int, int]] = {}
        for p, level in enumerate(self.simplices):
            for pos, s in enumerate(level):
                if len(s) != p + 1:
                    raise ValueError(f"simplex {s} listed under dimension {p}")
                self.index[s] = (p, pos)
        for s in self.index:
            for f in faces(s):
                if f not in self.index:
                    raise ValueError(f"not closed: face {f} of {s} is missing")
        self._cofaces: dict[Simplex, list[Simplex]] | None = None

    @classmethod
    def from_simplices(cls, simplices: Iterable[Iterable[int]]) -> "SimplicialComplex":
        """Downward closure of the given simplices."""
        levels: list[set[Simplex]] = []
        for raw in simplices:
            s = canonical(raw)
            for k in range(1, len(s) + 1):
                while len(levels) < k:
                    levels.append(set())
                levels[k - 1].update(combinations(s, k))
        return cls(levels)

    @property
    def dimension(self) -> int:
        """Top dimension, -1 for the empty complex."""
        return len(self.simplices) - 1

    def n_simplices(self, p: int) -> int:
        if 0 <= p < len(self.simplices):
            return len(self.simplices[p])
        return 0

    def counts(self) -> list[int]:
        return [len(level) for level in self.simplices]

    def position(self, simplex: Iterable[int]) -> int:
        s = canonical(simplex)
        try:
            return self.index[s][1]
        except KeyError:
            raise KeyError(f"simplex {s} is not in the complex") from None

    def maximal_simplices(self) -> list[Simplex]:
        """Simplices that are not a face of any other simplex, sorted by (dimension, lex)."""
        cof = self._coface_map()
        return [s for level in self.simplices for s in level if not cof.get(s)]

    def __contains__(self, simplex: object) -> bool:
        return simplex in self.index

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SimplicialComplex):
            return NotImplemented
        return self.simplices == other.simplices

    def __hash__(self) -> int:
        return hash(self.simplices)

    def __repr__(self) -> str:
        return f"SimplicialComplex(counts={self.counts()})"

    def _coface_map(self) -> dict[Simplex, list[Simplex]]:
        if self._cofaces is None:
            cof: dict[Simplex, list[Simplex]] = {s: [] for s in self.index}
            # cofaces come out in index order because levels are scanned in order
            for level in self.simplices[1:]:
                for t in level:
                    for f in faces(t):
                        cof[f].append(t)
            self._cofaces = cof
        return self._cofaces


def insert_closure(complex_: SimplicialComplex, simplex: Iterable[int]) -> SimplicialComplex:
    """Return a new complex containing ``complex_`` plus ``simplex`` and all its subsets."""
    s = canonical(simplex)
    if s in complex_.index:
        return complex_
    levels = [set(level) for level in complex_.simplices]
    for k in range(1, len(s) + 1):
        while len(levels) < k:
            levels.append(set())
        levels[k - 1].update(combinations(s, k))
    return SimplicialComplex(levels)


def cofaces(complex_: SimplicialComplex, simplex: Iterable[int]) -> list[Simplex]:
    """(p+1)-simplices of the complex having ``simplex`` as a face, in index order."""
    s = canonical(simplex)
    if s not in complex_.index:
        raise KeyError(f"simplex {s} is not in the complex")
    return list(complex_._coface_map()[s])


def neighbors(complex_: SimplicialComplex, simplex: Simplex) -> set[Simplex]:
    """Same-dimension simplices sharing a face or a coface with ``simplex``."""
    cof = complex_._coface_map()
    out: set[Simplex] = set()
    for f in faces(simplex):
        out.update(cof[f])
    for t in cof[simplex]:
        out.update(faces(t))
    out.discard(simplex)
    return out


def simplicial_distance(
    complex_: SimplicialComplex, sigma: Iterable[int], tau: Iterable[int]
) -> Union[int, float]:
    """Length of the shortest chain of p-simplices linking ``sigma`` to ``tau``.

    Consecutive simplices in the chain share a face or a coface. Returns
    :data:`INFINITY` when no chain exists.
    """
    a, b = canonical(sigma), canonical(tau)
    if len(a) != len(b):
        raise ValueError(f"dimension mismatch: {a} vs {b}")
    for s in (a, b):
        if s not in complex_.index:
            raise KeyError(f"simplex {s} is not in the complex")
    if a == b:
        return 0
    seen = {a}
    frontier = deque([(a, 0)])
    while frontier:
        s, d = frontier.popleft()
        for nb in neighbors(complex_, s):
            if nb == b:
                return d + 1
            if nb not in seen:
                seen.add(nb)
                frontier.append((nb, d + 1))
    return INFINITY


def distance_matrix(complex_: SimplicialComplex, p: int) -> np.ndarray:
    """All-pairs simplicial distances on K_p (``inf`` between components)."""
    level = complex_.simplices[p]
    n = len(level)
    pos = {s: i for i, s in enumerate(level)}
    adj = [[pos[nb] for nb in neighbors(complex_, s)] for s in level]
    out = np.full((n, n), np.inf)
    for src in range(n):
        out[src, src] = 0
        frontier = deque([src])
        while frontier:
            u = frontier.popleft()
            for v in adj[u]:
                if out[src, v] == np.inf:
                    out[src, v] = out[src, u] + 1
                    frontier.append(v)
    return out


@dataclass(frozen=True)
class Cochain:
    """Real values on the p-simplices of a complex, in index order."""

    complex: SimplicialComplex
    dimension: int
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or len(values) != self.complex.n_simplices(self.dimension):
            raise ValueError(
                f"cochain of length {values.size} does not match "
                f"|K_{self.dimension}| = {self.complex.n_simplices(self.dimension)}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("cochain values must be finite")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __getitem__(self, simplex: Iterable[int]) -> float:
        return float(self.values[self.complex.position(simplex)])

    def __len__(self) -> int:
        return len(self.values)


# -- text formats -----------------------------------------------------------

def write_complex(complex_: SimplicialComplex, stream: TextIO) -> None:
    """One maximal simplex per line, space-separated vertex ids."""
    for s in complex_.maximal_simplices():
        stream.write(" ".join(map(str, s)) + "\n")


def read_complex(stream: TextIO) -> SimplicialComplex:
    simplices = []
    for lineno, line in enumerate(stream, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            simplices.append([int(tok) for tok in line.split()])
        except ValueError:
            raise ValueError(f"line {lineno}: expected integer vertex ids, got {line!r}") from None
    return SimplicialComplex.from_simplices(simplices)


def write_cochain(cochain: Cochain, stream: TextIO) -> None:
    """``v0,v1,...<TAB>value`` per simplex, in index order."""
    for s, v in zip(cochain.complex.simplices[cochain.dimension], cochain.values):
        stream.write(",".join(map(str, s)) + "\t" + repr(float(v)) + "\n")


def read_cochain(complex_: SimplicialComplex, stream: TextIO) -> Cochain:
    entries: dict[Simplex, float] = {}
    dim = None
    for lineno, line in enumerate(stream, 1):
        line = line.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        try:
            key, val = line.split("\t")
            s = canonical(int(tok) for tok in key.split(","))
            entries[s] = float(val)
        except ValueError:
            raise ValueError(f"line {lineno}: malformed cochain entry {line!r}") from None
        if dim is None:
            dim = len(s) - 1
        elif len(s) - 1 != dim:
            raise ValueError(f"line {lineno}: mixed dimensions in cochain file")
    if dim is None:
        raise ValueError("empty cochain file")
    level = complex_.simplices[dim] if dim < len(complex_.simplices) else ()
    missing = [s for s in level if s not in entries]
    extra = [s for s in entries if complex_.index.get(s, (None,))[0] != dim]
    if missing or extra:
        raise ValueError(f"cochain does not match complex (missing={missing[:3]}, extra={extra[:3]})")
    return Cochain(complex_, dim, np.array([entries[s] for s in level]))
