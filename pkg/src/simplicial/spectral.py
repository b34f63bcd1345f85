"""Coboundary matrices, Hodge Laplacians and the simplicial Fourier transform.

The sparse route (``apply``, ``polynomial_apply``) is what training uses. The
dense eigendecomposition exists as an oracle for checking the polynomial
filters and for counting zero eigenvalues.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, TextIO, Union

import numpy as np
import scipy.sparse as sp

from .complex import Cochain, SimplicialComplex, faces

ArrayLike = Union[np.ndarray, Sequence[float], Cochain]

#: Largest |K_p| accepted by :func:`eigendecompose` unless overridden.
EIGEN_SIZE_GUARD = 5000


def _values(x: ArrayLike) -> np.ndarray:
    if isinstance(x, Cochain):
        return np.asarray(x.values, dtype=float)
    return np.asarray(x, dtype=float)


class SparseOperator:
    """Real sparse matrix in canonical CSR form.

    Duplicates are summed, explicit zeros dropped and column indices sorted,
    so two operators with the same entries compare equal.
    """

    __slots__ = ("matrix",)

    def __init__(self, matrix):
        m = sp.csr_matrix(matrix, dtype=float, copy=True)
        m.sum_duplicates()
        m.eliminate_zeros()
        m.sort_indices()
        self.matrix = m

    @classmethod
    def from_entries(cls, rows: int, cols: int, entries) -> "SparseOperator":
        entries = list(entries)
        if not entries:
            return cls(sp.csr_matrix((rows, cols)))
        r, c, v = zip(*entries)
        r, c = np.asarray(r), np.asarray(c)
        if r.min() < 0 or c.min() < 0 or r.max() >= rows or c.max() >= cols:
            raise IndexError("entry index out of bounds")
        return cls(sp.coo_matrix((v, (r, c)), shape=(rows, cols)))

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    @property
    def T(self) -> "SparseOperator":
        return SparseOperator(self.matrix.T)

    def entries(self) -> list[tuple[int, int, float]]:
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return [(int(coo.row[k]), int(coo.col[k]), float(coo.data[k])) for k in order]

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def __matmul__(self, other):
        if isinstance(other, SparseOperator):
            return SparseOperator(self.matrix @ other.matrix)
        return apply(self, other)

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        return SparseOperator(self.matrix + other.matrix)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseOperator):
            return NotImplemented
        return self.shape == other.shape and self.entries() == other.entries()

    def __repr__(self) -> str:
        return f"SparseOperator(shape={self.shape}, nnz={self.nnz})"

    def write(self, stream: TextIO) -> None:
        """Header ``rows cols nnz`` then sorted ``row col value`` triples."""
        rows, cols = self.shape
        stream.write(f"{rows} {cols} {self.nnz}\n")
        for r, c, v in self.entries():
            stream.write(f"{r} {c} {v!r}\n")

    @classmethod
    def read(cls, stream: TextIO) -> "SparseOperator":
        rows, cols, nnz = (int(t) for t in stream.readline().split())
        entries = []
        for line in stream:
            if line.strip():
                r, c, v = line.split()
                entries.append((int(r), int(c), float(v)))
        if len(entries) != nnz:
            raise ValueError(f"expected {nnz} entries, read {len(entries)}")
        return cls.from_entries(rows, cols, entries)


def apply(operator, vector: ArrayLike) -> np.ndarray:
    """Sparse matrix times vector (or times a column-stacked matrix)."""
    m = operator.matrix if isinstance(operator, (SparseOperator, HodgeLaplacian)) else operator
    x = _values(vector)
    if x.shape[0] != m.shape[1]:
        raise ValueError(f"operator has {m.shape[1]} columns, vector has length {x.shape[0]}")
    return np.asarray(m @ x)


def coboundary_matrix(complex_: SimplicialComplex, p: int) -> SparseOperator:
    """Matrix of the coboundary from p-cochains to (p+1)-cochains.

    Entry ``(tau, sigma)`` is ``(-1)**i`` when ``sigma`` is ``tau`` with its
    i-th vertex removed. Shape is ``|K_{p+1}| x |K_p|``; the matrix has no rows
    when there are no (p+1)-simplices.
    """
    if p < 0:
        raise ValueError("p must be non-negative")
    n_rows, n_cols = complex_.n_simplices(p + 1), complex_.n_simplices(p)
    if n_rows == 0:
        return SparseOperator(sp.csr_matrix((n_rows, n_cols)))
    index = complex_.index
    rows, cols, vals = [], [], []
    for r, tau in enumerate(complex_.simplices[p + 1]):
        for i, f in enumerate(faces(tau)):
            rows.append(r)
            cols.append(index[f][1])
            vals.append((-1.0) ** i)
    return SparseOperator(sp.coo_matrix((vals, (rows, cols)), shape=(n_rows, n_cols)))


@dataclass(frozen=True, eq=False)
class HodgeLaplacian:
    """Degree-p Laplacian with its up and down parts kept alongside."""

    dimension: int
    matrix: sp.csr_matrix
    up: Optional[sp.csr_matrix] = field(default=None, repr=False)
    down: Optional[sp.csr_matrix] = field(default=None, repr=False)
    scale: float = 1.0

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def operator(self) -> SparseOperator:
        return SparseOperator(self.matrix)

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()


def hodge_laplacian(complex_: SimplicialComplex, p: int, normalize: bool = False) -> HodgeLaplacian:
    """``B_p^T B_p + B_{p-1} B_{p-1}^T`` on the p-cochains.

    With ``normalize=True`` the result is divided by its largest eigenvalue so
    the spectrum lies in [0, 1]. This rescaling is an extension, off by default.
    """
    n = complex_.n_simplices(p)
    if p < 0 or n == 0:
        raise ValueError(f"complex has no {p}-simplices")
    b_up = coboundary_matrix(complex_, p).matrix
    up = (b_up.T @ b_up).tocsr()
    if p > 0:
        b_down = coboundary_matrix(complex_, p - 1).matrix
        down = (b_down @ b_down.T).tocsr()
    else:
        down = sp.csr_matrix((n, n))
    lap = SparseOperator(up + down).matrix
    scale = 1.0
    if normalize:
        lam = largest_eigenvalue(lap)
        if lam > 0:
            scale = 1.0 / lam
            lap = SparseOperator(lap * scale).matrix
    return HodgeLaplacian(p, lap, SparseOperator(up).matrix, SparseOperator(down).matrix, scale)


def largest_eigenvalue(matrix) -> float:
    m = matrix.matrix if isinstance(matrix, (SparseOperator, HodgeLaplacian)) else matrix
    n = m.shape[0]
    if n <= EIGEN_SIZE_GUARD:
        return float(np.linalg.eigvalsh(sp.csr_matrix(m).toarray())[-1])
    from scipy.sparse.linalg import eigsh

    return float(eigsh(m, k=1, which="LA", return_eigenvectors=False)[0])


def polynomial_apply(laplacian, weights: Sequence[float], x: ArrayLike) -> np.ndarray:
    """``sum_i weights[i] * L^i x`` using repeated sparse matvecs."""
    x = _values(x)
    power = x
    out = weights[0] * power
    for w in weights[1:]:
        power = apply(laplacian, power)
        out = out + w * power
    return out


@dataclass(frozen=True, eq=False)
class EigenBasis:
    """Ascending eigenvalues and orthonormal eigenvector columns of a Laplacian."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def size(self) -> int:
        return len(self.eigenvalues)


def eigendecompose(laplacian, max_size: int = EIGEN_SIZE_GUARD) -> EigenBasis:
    m = laplacian.matrix if isinstance(laplacian, (SparseOperator, HodgeLaplacian)) else laplacian
    n = m.shape[0]
    if n > max_size:
        raise ValueError(
            f"dense eigendecomposition of a {n}x{n} Laplacian exceeds the guard of "
            f"{max_size}; use the polynomial (matvec) route instead"
        )
    dense = m.toarray() if sp.issparse(m) else np.asarray(m, dtype=float)
    lam, u = np.linalg.eigh(dense)
    return EigenBasis(lam, u)


def _check(basis: EigenBasis, x: np.ndarray) -> None:
    if x.shape[0] != basis.size:
        raise ValueError(f"cochain of length {x.shape[0]} does not match basis of size {basis.size}")


def fourier_transform(cochain: ArrayLike, basis: EigenBasis) -> np.ndarray:
    c = _values(cochain)
    _check(basis, c)
    return basis.eigenvectors.T @ c


def inverse_fourier_transform(coefficients: ArrayLike, basis: EigenBasis) -> np.ndarray:
    v = _values(coefficients)
    _check(basis, v)
    return basis.eigenvectors @ v


def spectral_convolve(c: ArrayLike, c_prime: ArrayLike, basis: EigenBasis) -> np.ndarray:
    """Pointwise product in the frequency domain, mapped back.

    Depends on the choice of eigenvectors when eigenvalues repeat; polynomial
    filters do not.
    """
    return inverse_fourier_transform(
        fourier_transform(c, basis) * fourier_transform(c_prime, basis), basis
    )


def spectral_filter(weights: Sequence[float], basis: EigenBasis) -> np.ndarray:
    """The cochain whose transform is ``sum_i weights[i] * lambda**i``."""
    lam = basis.eigenvalues
    response = sum(w * lam**i for i, w in enumerate(weights))
    return inverse_fourier_transform(response, basis)


def betti_number(
    complex_: SimplicialComplex,
    k: int,
    tolerance: Optional[float] = None,
    max_size: int = EIGEN_SIZE_GUARD,
) -> int:
    """Number of (numerically) zero eigenvalues of L_k.

    The default tolerance is ``1e-8 * max(1, lambda_max)``.
    """
    lap = hodge_laplacian(complex_, k)
    basis = eigendecompose(lap, max_size=max_size)
    lam = basis.eigenvalues
    if tolerance is None:
        tolerance = 1e-8 * max(1.0, float(lam[-1]))
    return int(np.sum(np.abs(lam) <= tolerance))
