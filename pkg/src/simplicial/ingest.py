"""Paper/author corpora and their coauthorship complexes.

A paper with k authors becomes a (k-1)-simplex together with all of its
faces. The value of a cochain on a simplex is the total citation count of the
papers whose author set contains that simplex.
"""

from __future__ import annotations

import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Optional, TextIO

import numpy as np

from .complex import Cochain, SimplicialComplex

log = logging.getLogger(__name__)

MIN_CITATIONS = 5
MAX_AUTHORS = 10


@dataclass(frozen=True)
class PaperRecord:
    paper_id: str
    authors: frozenset[str]
    citations: int

    def __post_init__(self) -> None:
        if not self.authors:
            raise ValueError(f"paper {self.paper_id} has no authors")
        if self.citations < 0:
            raise ValueError(f"paper {self.paper_id} has negative citations")


@dataclass
class Corpus:
    papers: list[PaperRecord] = field(default_factory=list)
    skipped: int = 0

    def __post_init__(self) -> None:
        seen = set()
        for p in self.papers:
            if p.paper_id in seen:
                raise ValueError(f"duplicate paper id {p.paper_id!r}")
            seen.add(p.paper_id)
        self._by_author: Optional[dict[str, list[int]]] = None

    def __len__(self) -> int:
        return len(self.papers)

    @property
    def author_index(self) -> dict[str, list[int]]:
        """Author id to positions of their papers, in corpus order."""
        if self._by_author is None:
            index: dict[str, list[int]] = defaultdict(list)
            for i, p in enumerate(self.papers):
                for a in p.authors:
                    index[a].append(i)
            self._by_author = dict(index)
        return self._by_author

    def neighbors(self, i: int) -> list[int]:
        """Papers sharing at least one author with paper ``i``, sorted."""
        index = self.author_index
        out = set()
        for a in self.papers[i].authors:
            out.update(index[a])
        out.discard(i)
        return sorted(out)


def _parse_s2orc(line: str) -> PaperRecord:
    obj = json.loads(line)
    ids = []
    for author in obj.get("authors") or []:
        aid = (author.get("ids") or [None])[0]
        if aid is not None:
            ids.append(str(aid))
    if len(set(ids)) != len(ids):
        log.info("paper %s lists duplicate authors; deduplicated", obj.get("id"))
    return PaperRecord(str(obj["id"]), frozenset(ids), len(obj.get("inCitations") or []))


def _parse_tsv(line: str) -> PaperRecord:
    paper_id, authors, citations = line.rstrip("\n").split("\t")
    ids = [a.strip() for a in authors.split(";") if a.strip()]
    if len(set(ids)) != len(ids):
        log.info("paper %s lists duplicate authors; deduplicated", paper_id)
    return PaperRecord(paper_id, frozenset(ids), int(citations))


PARSERS = {"s2orc": _parse_s2orc, "tsv": _parse_tsv}


def parse_corpus(stream: Iterable[str], fmt: str = "s2orc") -> Corpus:
    """Read newline-delimited paper records, skipping malformed lines.

    ``fmt`` is ``"s2orc"`` (one JSON object per line with ``id``, ``authors``
    and ``inCitations``) or ``"tsv"`` (id, semicolon-joined authors, count).
    Duplicate paper ids keep the first occurrence.
    """
    try:
        parse = PARSERS[fmt]
    except KeyError:
        raise ValueError(f"unknown corpus format {fmt!r}") from None
    papers: list[PaperRecord] = []
    seen: set[str] = set()
    skipped = 0
    for lineno, line in enumerate(stream, 1):
        if not line.strip() or line.startswith("#"):
            continue
        try:
            rec = parse(line)
        except (ValueError, KeyError, TypeError, AttributeError) as exc:
            skipped += 1
            log.warning("line %d skipped: %s", lineno, exc)
            continue
        if rec.paper_id in seen:
            skipped += 1
            log.warning("line %d skipped: duplicate paper id %s", lineno, rec.paper_id)
            continue
        seen.add(rec.paper_id)
        papers.append(rec)
    return Corpus(papers, skipped=skipped)


def write_corpus(corpus: Corpus, stream: TextIO) -> None:
    """Write the tab-separated form, authors sorted."""
    for p in corpus.papers:
        stream.write(f"{p.paper_id}\t{';'.join(sorted(p.authors))}\t{p.citations}\n")


def filter_corpus(
    corpus: Corpus, min_citations: int = MIN_CITATIONS, max_authors: int = MAX_AUTHORS
) -> Corpus:
    kept = [p for p in corpus.papers if p.citations >= min_citations and len(p.authors) <= max_authors]
    return Corpus(kept, skipped=corpus.skipped)


def sample_papers(corpus: Corpus, walk_length: int = 80, seed: int = 0) -> list[PaperRecord]:
    """Distinct papers visited by a random walk on the shared-author graph.

    The walk starts at a uniformly random paper and takes ``walk_length``
    steps to uniformly random neighbours, so at most ``walk_length + 1``
    papers come back (in corpus order). A paper without neighbours is a
    dead end and the walk stays there.
    """
    if len(corpus) == 0:
        raise ValueError("cannot sample from an empty corpus")
    if walk_length < 0:
        raise ValueError("walk_length must be non-negative")
    rng = np.random.default_rng(seed)
    cur = int(rng.integers(len(corpus)))
    visited = {cur}
    for _ in range(walk_length):
        nbrs = corpus.neighbors(cur)
        if not nbrs:
            log.info("paper %s has no coauthor neighbours; walk stays", corpus.papers[cur].paper_id)
            break
        cur = nbrs[int(rng.integers(len(nbrs)))]
        visited.add(cur)
    if len(visited) < walk_length + 1:
        log.info("random walk of length %d visited %d distinct papers", walk_length, len(visited))
    return [corpus.papers[i] for i in sorted(visited)]


@dataclass
class CitationComplex:
    """A coauthorship complex with one citation cochain per dimension.

    ``labels[v]`` is the original author id of vertex ``v``.
    """

    complex: SimplicialComplex
    cochains: dict[int, Cochain]
    labels: list[str]

    def cochain(self, p: int) -> Cochain:
        try:
            return self.cochains[p]
        except KeyError:
            raise KeyError(f"no cochain in dimension {p} (top dimension {self.complex.dimension})") from None


def _author_key(a: str):
    # numeric ids sort numerically, everything else lexicographically after them
    return (0, int(a), "") if a.isdigit() else (1, 0, a)


def project_to_complex(papers: Iterable[PaperRecord]) -> CitationComplex:
    """Simplicial projection of the paper/author bipartite graph onto authors."""
    papers = list(papers)
    if not papers:
        raise ValueError("no papers to project")
    labels = sorted({a for p in papers for a in p.authors}, key=_author_key)
    vid = {a: i for i, a in enumerate(labels)}
    totals: dict[tuple[int, ...], int] = defaultdict(int)
    for p in papers:
        verts = sorted(vid[a] for a in p.authors)
        for k in range(1, len(verts) + 1):
            for s in combinations(verts, k):
                totals[s] += p.citations
    levels: list[list[tuple[int, ...]]] = [[] for _ in range(max(len(s) for s in totals))]
    for s in totals:
        levels[len(s) - 1].append(s)
    cx = SimplicialComplex(levels)
    cochains = {
        d: Cochain(cx, d, np.array([totals[s] for s in cx.simplices[d]], dtype=float))
        for d in range(len(cx.simplices))
    }
    return CitationComplex(cx, cochains, labels)


def complex_stats(citation_complex) -> list[int]:
    """Number of simplices per dimension, ``[]`` for an empty complex."""
    cx = citation_complex.complex if isinstance(citation_complex, CitationComplex) else citation_complex
    return cx.counts()
