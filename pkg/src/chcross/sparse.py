"""Minimal deterministic sparse linear algebra.

Triplet (COO) assembly, CSR storage, matrix-vector products, and a robust
direct solve for the Newton linear systems.  Storage and factorization are
delegated to scipy (SuperLU with partial pivoting); this module pins the
conventions the rest of the package relies on: duplicates sum on
compression, column indices are sorted and unique per row, explicit zeros
are kept (fixed sparsity patterns), and identical inputs produce
bitwise-identical outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as _sps
import scipy.sparse.linalg as _spla

# Relative pivot-ratio threshold below which a factorization is reported
# as singular to working precision.
_RCOND_FLOOR = 1e-15


class SingularMatrixError(RuntimeError):
    """Direct factorization failed; ``pivot`` is the offending index when known."""

    def __init__(self, message: str, pivot: int | None = None):
        super().__init__(message)
        self.pivot = pivot


@dataclass
class Triplets:
    """COO-style entries targeting an ``n_rows x n_cols`` matrix.

    Duplicate (row, col) pairs are allowed and are summed by :func:`compress`.
    """

    n_rows: int
    n_cols: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.int64)
        self.cols = np.asarray(self.cols, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if not (self.rows.shape == self.cols.shape == self.values.shape):
            raise ValueError("rows, cols, values must have identical shapes")

    @classmethod
    def from_entries(cls, entries, n_rows: int, n_cols: int) -> "Triplets":
        """Build from an iterable of ``(row, col, value)`` tuples."""
        if entries:
            rows, cols, vals = map(np.asarray, zip(*entries))
        else:
            rows = cols = vals = np.empty(0)
        return cls(n_rows, n_cols, rows, cols, vals)


@dataclass
class CsrMatrix:
    """Compressed sparse row matrix with canonical (sorted, unique) columns."""

    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray
    n_rows: int
    n_cols: int
    _scipy: _sps.csr_matrix | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.row_ptr.shape != (self.n_rows + 1,):
            raise ValueError("row_ptr must have length n_rows + 1")
        if self.row_ptr[-1] != self.col_idx.shape[0] or self.col_idx.shape != self.values.shape:
            raise ValueError("row_ptr[-1] must equal nnz")
        if np.any(np.diff(self.row_ptr) < 0):
            raise ValueError("row_ptr must be nondecreasing")

    @property
    def nnz(self) -> int:
        return int(self.row_ptr[-1])

    def to_scipy(self) -> _sps.csr_matrix:
        if self._scipy is None:
            self._scipy = _sps.csr_matrix(
                (self.values, self.col_idx, self.row_ptr), shape=(self.n_rows, self.n_cols)
            )
        return self._scipy

    def coo(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return (rows, cols, values) arrays; values is a view, do not mutate."""
        rows = np.repeat(np.arange(self.n_rows, dtype=np.int64), np.diff(self.row_ptr))
        return rows, self.col_idx.astype(np.int64), self.values

    def toarray(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def with_values(self, values: np.ndarray) -> "CsrMatrix":
        """Same sparsity pattern, new values (used for fixed-pattern Jacobians)."""
        if values.shape != self.values.shape:
            raise ValueError("values length must match the pattern nnz")
        return CsrMatrix(self.row_ptr, self.col_idx, np.asarray(values, dtype=np.float64),
                         self.n_rows, self.n_cols)


def compress(t: Triplets) -> CsrMatrix:
    """Compress triplets to CSR, summing duplicates.

    Entries that sum to zero stay structurally present, so repeated
    assemblies over the same index set share one sparsity pattern.
    """
    if t.rows.size:
        if t.rows.min() < 0 or t.rows.max() >= t.n_rows:
            raise IndexError("triplet row index out of range")
        if t.cols.min() < 0 or t.cols.max() >= t.n_cols:
            raise IndexError("triplet column index out of range")
    coo = _sps.coo_matrix((t.values, (t.rows, t.cols)), shape=(t.n_rows, t.n_cols))
    csr = coo.tocsr()  # sums duplicates, canonicalizes column order
    csr.sort_indices()
    return CsrMatrix(csr.indptr.copy(), csr.indices.copy(), csr.data.copy(),
                     t.n_rows, t.n_cols, _scipy=csr)


def matvec(a: CsrMatrix, x: np.ndarray) -> np.ndarray:
    """Return ``a @ x`` (ordered per-row summation; deterministic)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (a.n_cols,):
        raise ValueError(f"dimension mismatch: matrix is {a.n_rows}x{a.n_cols}, x has {x.shape}")
    return a.to_scipy() @ x


class Factorization:
    """LU factors of one matrix, reusable across right-hand sides.

    ``ordering`` optionally fixes the elimination order: unknown
    ``ordering[k]`` is eliminated k-th.  Callers that know the underlying
    graph (e.g. a structured mesh) can pass a fill-reducing order computed
    once per pattern; SuperLU then runs in symmetric mode on the permuted
    matrix.  Without it SuperLU picks its own column ordering.
    """

    def __init__(self, a: CsrMatrix, ordering: np.ndarray | None = None):
        if a.n_rows != a.n_cols:
            raise ValueError("factorization requires a square matrix")
        self.n = a.n_rows
        self._order = None
        mat = a.to_scipy()
        kwargs = {}
        if ordering is not None:
            ordering = np.asarray(ordering, dtype=np.int64)
            if ordering.shape != (self.n,) or np.any(np.sort(ordering) != np.arange(self.n)):
                raise ValueError("ordering must be a permutation of the row indices")
            self._order = ordering
            mat = mat[ordering][:, ordering]
            kwargs = dict(permc_spec="NATURAL",
                          options=dict(SymmetricMode=True, DiagPivotThresh=1e-3))
        try:
            self._lu = _spla.splu(mat.tocsc(), **kwargs)
        except RuntimeError as exc:  # scipy reports exact singularity this way
            raise SingularMatrixError(
                f"sparse LU failed: {exc}", pivot=_first_empty_pivot(a)
            ) from exc
        u_diag = np.abs(self._lu.U.diagonal())
        if u_diag.size:
            worst = int(np.argmin(u_diag))
            if not np.all(np.isfinite(u_diag)) or u_diag[worst] <= _RCOND_FLOOR * u_diag.max():
                raise SingularMatrixError(
                    f"matrix is singular to working precision (pivot {worst}, "
                    f"|U[{worst},{worst}]| = {u_diag[worst]:.3e})",
                    pivot=worst,
                )

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=np.float64)
        if b.shape != (self.n,):
            raise ValueError(f"right-hand side must have length {self.n}")
        if self._order is None:
            return self._lu.solve(b)
        y = self._lu.solve(b[self._order])
        x = np.empty_like(y)
        x[self._order] = y
        return x


def solve(a: CsrMatrix, b: np.ndarray, ordering: np.ndarray | None = None) -> np.ndarray:
    """Solve ``a x = b`` by sparse LU with partial pivoting (SuperLU).

    Raises :class:`SingularMatrixError` when the factorization produces an
    exactly-zero or working-precision-zero pivot.
    """
    return Factorization(a, ordering=ordering).solve(b)


def _first_empty_pivot(a: CsrMatrix) -> int | None:
    """Best-effort pivot diagnosis: the first structurally empty row, if any."""
    counts = np.diff(a.row_ptr)
    empty = np.flatnonzero(counts == 0)
    return int(empty[0]) if empty.size else None
