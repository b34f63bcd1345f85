import io
from itertools import combinations

import numpy as np
import pytest
from hypothesis import strategies as st

from simplicial.complex import SimplicialComplex
from simplicial.ingest import parse_corpus, project_to_complex

# Four-paper toy corpus: papers, authors, citations. Authors A..D become vertices 0..3.
FIG1_TSV = "I\tA;B;C\t100\nII\tA;B\t50\nIII\tA;D\t10\nIV\tC;D\t4\n"
A, B, C, D = 0, 1, 2, 3
EDGES = [(A, B), (A, C), (A, D), (B, C), (C, D)]

FIG1_L1 = np.array([
    [3, 0, 1, 0, 0],
    [0, 3, 1, 0, -1],
    [1, 1, 2, 0, 1],
    [0, 0, 0, 3, -1],
    [0, -1, 1, -1, 2],
])
FIG1_EDGE_CITATIONS = np.array([150.0, 100.0, 10.0, 100.0, 4.0])
FIG1_VERTEX_CITATIONS = np.array([160.0, 150.0, 104.0, 14.0])


@pytest.fixture
def fig1_corpus():
    return parse_corpus(io.StringIO(FIG1_TSV), "tsv")


@pytest.fixture
def fig1_cc(fig1_corpus):
    return project_to_complex(fig1_corpus.papers)


@pytest.fixture
def fig1():
    return SimplicialComplex.from_simplices([[A, B, C], [A, B], [A, D], [C, D]])


def total_size(simplices):
    return sum(2 ** len(s) - 1 for s in simplices)


def random_complex(rng, max_simplices=50, n_vertices=7, max_dim=3):
    """Union of random simplices, grown while the closure stays within ``max_simplices``."""
    maximal = []
    for _ in range(40):
        k = int(rng.integers(1, max_dim + 2))
        s = tuple(sorted(rng.choice(n_vertices, size=min(k, n_vertices), replace=False).tolist()))
        cx = SimplicialComplex.from_simplices(maximal + [s])
        if sum(cx.counts()) > max_simplices:
            break
        maximal.append(s)
    return SimplicialComplex.from_simplices(maximal or [(0,)])


@st.composite
def complexes(draw, max_simplices=50, n_vertices=7, max_dim=3):
    simplices = draw(st.lists(
        st.sets(st.integers(0, n_vertices - 1), min_size=1, max_size=max_dim + 1),
        min_size=1, max_size=12))
    kept = []
    for s in simplices:
        cx = SimplicialComplex.from_simplices(kept + [sorted(s)])
        if sum(cx.counts()) > max_simplices:
            break
        kept.append(sorted(s))
    return SimplicialComplex.from_simplices(kept or [[0]])


def brute_distance_matrix(cx, p):
    """Floyd-Warshall over the set-theoretic adjacency.

    Two p-simplices are adjacent when their intersection is a shared (p-1)-face
    or their union is a (p+1)-simplex of the complex.
    """
    level = cx.simplices[p]
    n = len(level)
    dist = np.full((n, n), np.inf)
    members = {frozenset(s) for lv in cx.simplices for s in lv}
    for i, a in enumerate(level):
        dist[i, i] = 0
        for j, b in enumerate(level):
            if i == j:
                continue
            share_face = p >= 1 and len(set(a) & set(b)) == p
            share_coface = frozenset(a) | frozenset(b) in members and len(set(a) | set(b)) == p + 2
            if share_face or share_coface:
                dist[i, j] = 1
    for k in range(n):
        dist = np.minimum(dist, dist[:, [k]] + dist[[k], :])
    return dist


def sphere_boundary(k):
    """Boundary of the (k+1)-simplex: all proper faces of {0..k+1}."""
    return SimplicialComplex.from_simplices(combinations(range(k + 2), k + 1))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
