"""Compressed-row sparse matrices, Matrix Market I/O and window counting."""

from __future__ import annotations

import io
import os
from dataclasses import dataclass
from typing import Iterable, Optional, Union

import numpy as np

PathLike = Union[str, os.PathLike]


class MatrixMarketError(ValueError):
    """Raised for malformed Matrix Market input. Carries the 1-based line number."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Immutable CSR matrix with strictly increasing column indices per row.

    ``values`` is carried for round-tripping only; the simulator never reads it.
    """

    rows: int
    cols: int
    row_starts: np.ndarray
    col_indices: np.ndarray
    values: Optional[np.ndarray] = None

    def __post_init__(self):
        rs = np.ascontiguousarray(self.row_starts, dtype=np.int64)
        ci = np.ascontiguousarray(self.col_indices, dtype=np.int64)
        if rs.shape != (self.rows + 1,):
            raise ValueError("row_starts must have length rows + 1")
        if rs[0] != 0 or rs[-1] != ci.size:
            raise ValueError("row_starts must start at 0 and end at nnz")
        if np.any(np.diff(rs) < 0):
            raise ValueError("row_starts must be non-decreasing")
        if ci.size:
            if ci.min() < 0 or ci.max() >= self.cols:
                raise ValueError("column index out of range")
            # strictly increasing inside each row: a non-increase is only legal at a row boundary
            bad = np.flatnonzero(np.diff(ci) <= 0) + 1
            if bad.size:
                starts = np.zeros(ci.size, dtype=bool)
                starts[rs[:-1][rs[:-1] < ci.size]] = True
                if not np.all(starts[bad]):
                    raise ValueError("column indices must be strictly increasing within a row")
        rs.setflags(write=False)
        ci.setflags(write=False)
        object.__setattr__(self, "row_starts", rs)
        object.__setattr__(self, "col_indices", ci)
        if self.values is not None:
            v = np.ascontiguousarray(self.values)
            if v.shape != ci.shape:
                raise ValueError("values must match col_indices")
            v.setflags(write=False)
            object.__setattr__(self, "values", v)

    @property
    def nnz(self) -> int:
        return int(self.col_indices.size)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def row_indices(self) -> np.ndarray:
        """Row coordinate of every stored nonzero (COO expansion)."""
        return np.repeat(np.arange(self.rows, dtype=np.int64), np.diff(self.row_starts))

    def row(self, i: int) -> np.ndarray:
        return self.col_indices[self.row_starts[i]:self.row_starts[i + 1]]

    def coords(self) -> set[tuple[int, int]]:
        return set(zip(self.row_indices().tolist(), self.col_indices.tolist()))

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=np.int8)
        out[self.row_indices(), self.col_indices] = 1
        return out

    def structurally_equal(self, other: "SparseMatrix") -> bool:
        return (
            self.shape == other.shape
            and np.array_equal(self.row_starts, other.row_starts)
            and np.array_equal(self.col_indices, other.col_indices)
        )

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        if not self.structurally_equal(other):
            return False
        if self.values is None or other.values is None:
            return self.values is None and other.values is None
        return bool(np.array_equal(self.values, other.values))

    __hash__ = None

    def __repr__(self):
        return f"SparseMatrix({self.rows}x{self.cols}, nnz={self.nnz})"


def from_coo(rows: int, cols: int, r: Iterable[int], c: Iterable[int], values=None,
             *, sum_duplicates: bool = False) -> SparseMatrix:
    """Build a SparseMatrix from coordinate lists.

    Duplicate coordinates raise unless ``sum_duplicates`` is set, in which case
    the first occurrence wins for the pattern and values are added.
    """
    r = np.asarray(r, dtype=np.int64).ravel()
    c = np.asarray(c, dtype=np.int64).ravel()
    if r.shape != c.shape:
        raise ValueError("row and column coordinate arrays differ in length")
    if r.size and (r.min() < 0 or r.max() >= rows or c.min() < 0 or c.max() >= cols):
        raise ValueError("coordinate out of bounds")
    keys = r * cols + c
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    v = None if values is None else np.asarray(values).ravel()[order]
    dup = np.flatnonzero(np.diff(keys) == 0)
    if dup.size:
        if not sum_duplicates:
            raise ValueError("duplicate coordinate")
        first = np.ones(keys.size, dtype=bool)
        first[dup + 1] = False
        if v is not None:
            group = np.cumsum(first) - 1
            v = np.bincount(group, weights=v) if np.isrealobj(v) else v[first]
        keys = keys[first]
    rr = keys // cols if cols else keys
    cc = keys - rr * cols
    row_starts = np.zeros(rows + 1, dtype=np.int64)
    np.cumsum(np.bincount(rr, minlength=rows), out=row_starts[1:])
    return SparseMatrix(rows, cols, row_starts, cc, v)


def empty(rows: int, cols: int) -> SparseMatrix:
    return SparseMatrix(rows, cols, np.zeros(rows + 1, dtype=np.int64), np.zeros(0, dtype=np.int64))


def identity(n: int) -> SparseMatrix:
    return SparseMatrix(n, n, np.arange(n + 1), np.arange(n), np.ones(n))


def dense(rows: int, cols: int) -> SparseMatrix:
    """Fully populated pattern (every coordinate is a nonzero)."""
    return SparseMatrix(rows, cols, np.arange(rows + 1) * cols, np.tile(np.arange(cols), rows))


def from_dense(a) -> SparseMatrix:
    a = np.asarray(a)
    r, c = np.nonzero(a)
    return from_coo(a.shape[0], a.shape[1], r, c, a[r, c])


def transpose(m: SparseMatrix) -> SparseMatrix:
    """Structural transpose; values follow their coordinates."""
    r = m.row_indices()
    c = m.col_indices
    order = np.lexsort((r, c))
    row_starts = np.zeros(m.cols + 1, dtype=np.int64)
    np.cumsum(np.bincount(c, minlength=m.cols), out=row_starts[1:])
    vals = None if m.values is None else m.values[order]
    return SparseMatrix(m.cols, m.rows, row_starts, r[order], vals)


def density(m: SparseMatrix) -> float:
    """Fraction of coordinates holding a nonzero, nnz / (rows * cols)."""
    size = m.rows * m.cols
    if size <= 0:
        raise ValueError("density is undefined for an empty-shape matrix")
    return m.nnz / size


def _check_window(m: SparseMatrix, row_lo, row_hi, col_lo, col_hi):
    if not (0 <= row_lo <= row_hi <= m.rows):
        raise ValueError(f"row window [{row_lo}, {row_hi}) invalid for {m.rows} rows")
    if not (0 <= col_lo <= col_hi <= m.cols):
        raise ValueError(f"column window [{col_lo}, {col_hi}) invalid for {m.cols} columns")


def count_in_window(m: SparseMatrix, row_lo: int, row_hi: int, col_lo: int, col_hi: int) -> int:
    """Nonzeros inside the half-open window, by binary search per row."""
    _check_window(m, row_lo, row_hi, col_lo, col_hi)
    if row_lo == row_hi or col_lo == col_hi:
        return 0
    from . import kernels

    return int(kernels.window_counts(
        m.row_starts, m.col_indices,
        np.array([row_lo]), np.array([row_hi]), np.array([col_lo]), np.array([col_hi]),
    )[0])


# ---------------------------------------------------------------- Matrix Market

_FIELDS = {"real", "integer", "pattern"}
_SYMMETRY = {"general", "symmetric"}


def _parse(lines: Iterable[str]) -> SparseMatrix:
    it = enumerate(lines, start=1)
    try:
        lineno, banner = next(it)
    except StopIteration:
        raise MatrixMarketError("empty file", 1) from None
    tok = banner.strip().split()
    if len(tok) != 5 or tok[0].lower() != "%%matrixmarket":
        raise MatrixMarketError("missing %%MatrixMarket banner", lineno)
    obj, fmt, field, sym = (t.lower() for t in tok[1:])
    if obj != "matrix" or fmt != "coordinate":
        raise MatrixMarketError(f"unsupported format '{obj} {fmt}'", lineno)
    if field not in _FIELDS:
        raise MatrixMarketError(f"unsupported field '{field}'", lineno)
    if sym not in _SYMMETRY:
        raise MatrixMarketError(f"unsupported symmetry '{sym}'", lineno)

    size_line = None
    for lineno, line in it:
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        size_line = (lineno, s)
        break
    if size_line is None:
        raise MatrixMarketError("missing size line", lineno + 1)
    lineno, s = size_line
    try:
        nrows, ncols, nents = (int(x) for x in s.split())
    except ValueError:
        raise MatrixMarketError(f"bad size line '{s}'", lineno) from None
    if nrows < 0 or ncols < 0 or nents < 0:
        raise MatrixMarketError("negative size", lineno)

    r = np.empty(nents, dtype=np.int64)
    c = np.empty(nents, dtype=np.int64)
    v = np.ones(nents, dtype=np.int64 if field == "integer" else np.float64)
    src_line = np.empty(nents, dtype=np.int64)
    n = 0
    want = 2 if field == "pattern" else 3
    for lineno, line in it:
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        if n >= nents:
            raise MatrixMarketError("more entries than declared", lineno)
        parts = s.split()
        if len(parts) < want:
            raise MatrixMarketError(f"expected {want} fields, got {len(parts)}", lineno)
        try:
            i, j = int(parts[0]), int(parts[1])
            if field == "real":
                v[n] = float(parts[2])
            elif field == "integer":
                v[n] = int(parts[2])
        except ValueError:
            raise MatrixMarketError(f"unparseable entry '{s}'", lineno) from None
        if not (1 <= i <= nrows and 1 <= j <= ncols):
            raise MatrixMarketError(f"coordinate ({i}, {j}) out of bounds for {nrows}x{ncols}", lineno)
        if sym == "symmetric" and j > i:
            raise MatrixMarketError(f"symmetric file has upper-triangle entry ({i}, {j})", lineno)
        r[n], c[n], src_line[n] = i - 1, j - 1, lineno
        n += 1
    if n != nents:
        raise MatrixMarketError(f"declared {nents} entries, found {n}", lineno + 1)

    if sym == "symmetric":
        off = r != c
        r, c = np.concatenate([r, c[off]]), np.concatenate([c, r[off]])
        v = np.concatenate([v, v[off]])
        src_line = np.concatenate([src_line, src_line[off]])

    keys = r * ncols + c
    order = np.argsort(keys, kind="stable")
    dup = np.flatnonzero(np.diff(keys[order]) == 0)
    if dup.size:
        raise MatrixMarketError("duplicate entry", int(src_line[order[dup[0] + 1]]))
    return from_coo(nrows, ncols, r, c, v)


def load_matrix_market(path: PathLike) -> SparseMatrix:
    """Read a coordinate Matrix Market file into 0-indexed CSR.

    Symmetric files are expanded to general storage; pattern files get unit values.
    """
    with open(path, "r") as fh:
        return _parse(fh)


def loads_matrix_market(text: str) -> SparseMatrix:
    return _parse(io.StringIO(text))


def save_matrix_market(m: SparseMatrix, path: PathLike, comment: Optional[str] = None) -> None:
    field = "pattern" if m.values is None else (
        "integer" if np.issubdtype(m.values.dtype, np.integer) else "real")
    with open(path, "w") as fh:
        fh.write(f"%%MatrixMarket matrix coordinate {field} general\n")
        if comment:
            for line in comment.splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{m.rows} {m.cols} {m.nnz}\n")
        r = m.row_indices() + 1
        c = m.col_indices + 1
        if m.values is None:
            fh.writelines(f"{i} {j}\n" for i, j in zip(r.tolist(), c.tolist()))
        elif field == "integer":
            fh.writelines(f"{i} {j} {x}\n" for i, j, x in zip(r.tolist(), c.tolist(), m.values.tolist()))
        else:
            fh.writelines(f"{i} {j} {x!r}\n" for i, j, x in zip(r.tolist(), c.tolist(), m.values.tolist()))
