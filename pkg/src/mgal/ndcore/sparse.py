"""Compressed-sparse-row matrices and the sparse-times-dense kernel."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mgal.errors import DimensionError, ValidationError


@dataclass(frozen=True)
class SparseMatrix:
    """CSR matrix with float64 values.

    Column indices inside a row are kept strictly increasing; the
    constructors below always produce canonical form.
    """

    rows: int
    cols: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray

    def __post_init__(self):
        indptr = np.asarray(self.indptr, dtype=np.int64)
        indices = np.asarray(self.indices, dtype=np.int64)
        data = np.asarray(self.data, dtype=np.float64)
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "data", data)
        if indptr.shape != (self.rows + 1,) or indptr[0] != 0:
            raise ValidationError(f"row pointer must have length {self.rows + 1} and start at 0")
        if np.any(np.diff(indptr) < 0):
            raise ValidationError("row pointer must be non-decreasing")
        if data.shape != (indptr[-1],) or indices.shape != data.shape:
            raise ValidationError(
                f"value/index arrays must have length {indptr[-1]}, got {data.shape[0]}/{indices.shape[0]}"
            )
        if indices.size:
            if indices.min() < 0 or indices.max() >= self.cols:
                raise ValidationError(f"column index out of range for {self.cols} columns")
            # strictly increasing within each row: a drop is only allowed at row starts
            row_starts = np.zeros(indices.size, dtype=bool)
            row_starts[indptr[:-1][np.diff(indptr) > 0]] = True
            if np.any((np.diff(indices) <= 0) & ~row_starts[1:]):
                raise ValidationError("column indices must be strictly increasing within each row")
        if not np.all(np.isfinite(data)):
            raise ValidationError("sparse values must be finite")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def nnz(self) -> int:
        return int(self.indptr[-1])

    @classmethod
    def from_coo(cls, rows: int, cols: int, r, c, v) -> "SparseMatrix":
        """Build from triplets; duplicate coordinates are summed."""
        r = np.asarray(r, dtype=np.int64)
        c = np.asarray(c, dtype=np.int64)
        v = np.asarray(v, dtype=np.float64)
        if r.size and (r.min() < 0 or r.max() >= rows or c.min() < 0 or c.max() >= cols):
            raise ValidationError("coordinate out of range")
        order = np.lexsort((c, r))
        r, c, v = r[order], c[order], v[order]
        if r.size:
            new = np.ones(r.size, dtype=bool)
            new[1:] = (r[1:] != r[:-1]) | (c[1:] != c[:-1])
            starts = np.flatnonzero(new)
            v = np.add.reduceat(v, starts)
            r, c = r[starts], c[starts]
        indptr = np.zeros(rows + 1, dtype=np.int64)
        np.cumsum(np.bincount(r, minlength=rows), out=indptr[1:])
        return cls(rows, cols, indptr, c, v)

    @classmethod
    def from_dense(cls, a) -> "SparseMatrix":
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2:
            raise DimensionError(f"expected a 2-D array, got shape {a.shape}")
        r, c = np.nonzero(a)
        return cls.from_coo(a.shape[0], a.shape[1], r, c, a[r, c])

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        idx = np.arange(n)
        return cls(n, n, np.arange(n + 1), idx, np.ones(n))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "SparseMatrix":
        return cls(rows, cols, np.zeros(rows + 1), np.zeros(0), np.zeros(0))

    def row_ids(self) -> np.ndarray:
        return np.repeat(np.arange(self.rows), np.diff(self.indptr))

    def to_coo(self):
        return self.row_ids(), self.indices.copy(), self.data.copy()

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        out[self.row_ids(), self.indices] = self.data
        return out

    def transpose(self) -> "SparseMatrix":
        r, c, v = self.to_coo()
        return SparseMatrix.from_coo(self.cols, self.rows, c, r, v)

    @property
    def T(self) -> "SparseMatrix":
        return self.transpose()

    def row_sums(self) -> np.ndarray:
        return np.bincount(self.row_ids(), weights=self.data, minlength=self.rows)

    def is_symmetric(self, atol: float = 1e-12) -> bool:
        if self.rows != self.cols:
            return False
        r, c, v = self.to_coo()
        diff = SparseMatrix.from_coo(self.rows, self.cols, np.r_[r, c], np.r_[c, r], np.r_[v, -v])
        return bool(np.all(np.abs(diff.data) <= atol))

    def diagonal(self) -> np.ndarray:
        out = np.zeros(min(self.rows, self.cols))
        r = self.row_ids()
        on = r == self.indices
        out[r[on]] = self.data[on]
        return out

    def dot(self, b: np.ndarray) -> np.ndarray:
        return csr_matmul(self, b)


def csr_matmul(s: SparseMatrix, b: np.ndarray) -> np.ndarray:
    """Dense result of ``s @ b`` for a CSR ``s`` and dense 2-D ``b``."""
    b = np.asarray(b, dtype=np.float64)
    if b.ndim != 2 or s.cols != b.shape[0]:
        raise DimensionError(f"cannot multiply sparse {s.shape} by dense {b.shape}")
    out = np.zeros((s.rows, b.shape[1]))
    if s.nnz == 0:
        return out
    contrib = s.data[:, None] * b[s.indices]
    counts = np.diff(s.indptr)
    nonempty = counts > 0
    # reduceat misbehaves on empty segments, so only reduce non-empty rows
    out[nonempty] = np.add.reduceat(contrib, s.indptr[:-1][nonempty], axis=0)
    return out
