"""On-disk layout of a sampled coauthorship complex.

    complex.txt       maximal simplices, one per line
    cochain_<p>.txt   citation cochain in dimension p
    vertices.txt      vertex id <TAB> author id
"""

from __future__ import annotations

import hashlib
import os
from pathlib import Path

from .complex import read_cochain, read_complex, write_cochain, write_complex
from .ingest import CitationComplex


def save_citation_complex(cc: CitationComplex, directory: str | os.PathLike) -> list[Path]:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    written = [out / "complex.txt", out / "vertices.txt"]
    with open(written[0], "w") as fh:
        fh.write("# maximal simplices, one per line\n")
        write_complex(cc.complex, fh)
    with open(written[1], "w") as fh:
        for v, label in enumerate(cc.labels):
            fh.write(f"{v}\t{label}\n")
    for p in sorted(cc.cochains):
        path = out / f"cochain_{p}.txt"
        with open(path, "w") as fh:
            write_cochain(cc.cochains[p], fh)
        written.append(path)
    return written


def load_citation_complex(directory: str | os.PathLike) -> CitationComplex:
    src = Path(directory)
    with open(src / "complex.txt") as fh:
        cx = read_complex(fh)
    labels = [str(v) for v in range(cx.n_simplices(0))]
    if (src / "vertices.txt").exists():
        with open(src / "vertices.txt") as fh:
            for line in fh:
                if line.strip():
                    v, label = line.rstrip("\n").split("\t")
                    labels[int(v)] = label
    cochains = {}
    for p in range(cx.dimension + 1):
        path = src / f"cochain_{p}.txt"
        if path.exists():
            with open(path) as fh:
                cochains[p] = read_cochain(cx, fh)
    return CitationComplex(cx, cochains, labels)


def sha256_file(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)
