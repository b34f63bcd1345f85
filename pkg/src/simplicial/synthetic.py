"""Seeded toy corpora shaped like small coauthorship samples."""

from __future__ import annotations

import numpy as np

from .ingest import Corpus, PaperRecord


def synthetic_corpus(
    n_papers: int = 30,
    max_authors: int = 6,
    n_authors: int | None = None,
    seed: int = 0,
    min_citations: int = 5,
) -> Corpus:
    """Papers whose author sets overlap like a research community.

    Each paper picks 1..``max_authors`` authors. The first author comes from
    an earlier paper when possible (keeps the shared-author graph connected);
    the rest are drawn preferentially by past productivity, with a fixed
    chance of a newcomer. Citation counts are heavy-tailed integers
    ``>= min_citations``.
    """
    rng = np.random.default_rng(seed)
    if n_authors is None:
        n_authors = max(4, 2 * n_papers)
    productivity = np.zeros(n_authors)
    next_new = 0
    papers = []
    for i in range(n_papers):
        k = int(rng.integers(1, max_authors + 1))
        authors: set[int] = set()
        if i > 0:
            prev = papers[int(rng.integers(len(papers)))]
            authors.add(int(rng.choice(sorted(int(a) for a in prev.authors))))
        while len(authors) < k:
            w = productivity + 0.5 * (productivity > 0)
            w[sorted(authors)] = 0.0
            can_add_new = next_new < n_authors
            if can_add_new and (w.sum() == 0 or rng.random() < 0.5):
                authors.add(next_new)
                next_new += 1
            elif w.sum() > 0:
                authors.add(int(rng.choice(n_authors, p=w / w.sum())))
            else:
                break
        for a in authors:
            productivity[a] += 1
        citations = min_citations + int(np.floor(rng.lognormal(mean=3.0, sigma=1.0)))
        papers.append(PaperRecord(f"p{i}", frozenset(str(a) for a in authors), citations))
    return Corpus(papers)
