"""
Exact and modular linear algebra.

Sparse row-dict elimination (reduced row echelon form) over the rational or a
prime field, a vectorized dense rank over GF(p), nullspaces and small inverses.
"""

from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Sequence, Tuple

import numpy as np

from scripts.tensors.scalars import Field, PrimeField, RATIONAL

Row = Dict[int, object]


class _Arith:
    """Scalar operations of a field for the Python-level elimination loops."""

    def __init__(self, field: Field):
        self.field = field
        self.p = field.p if isinstance(field, PrimeField) else None

    def coerce(self, value):
        if self.p is not None:
            if isinstance(value, Fraction):
                return (value.numerator % self.p) * pow(value.denominator % self.p, -1, self.p) % self.p
            return int(value) % self.p
        return value if isinstance(value, (int, Fraction)) else Fraction(value)

    def norm(self, value):
        if self.p is not None:
            return value % self.p
        if isinstance(value, Fraction) and value.denominator == 1:
            return int(value)
        return value

    def inv(self, value):
        if self.p is not None:
            return pow(value, -1, self.p)
        return Fraction(1) / value


class Eliminator:
    """
    Incremental reduced row echelon form of a sparse system.

    pivots: pivot column -> {free column: coefficient}, meaning
    x[pivot] + sum(coeff * x[free]) = 0 on the solution space.
    """

    def __init__(self, field: Field = RATIONAL):
        self.ar = _Arith(field)
        self.pivots: Dict[int, Row] = {}

    def reduce(self, raw: Row) -> Row:
        """Remainder of a row after elimination by the current pivots."""
        ar = self.ar
        row = {}
        for col, value in raw.items():
            value = ar.coerce(value)
            if value != 0:
                row[col] = value
        for pc in [c for c in row if c in self.pivots]:
            coeff = row.pop(pc, 0)
            if coeff == 0:
                continue
            for c, pv in self.pivots[pc].items():
                updated = ar.norm(row.get(c, 0) - coeff * pv)
                if updated == 0:
                    row.pop(c, None)
                else:
                    row[c] = updated
        return row

    def add(self, raw: Row) -> bool:
        """Insert a row; False when it is dependent on the rows already added."""
        ar = self.ar
        row = self.reduce(raw)
        if not row:
            return False
        pivot_col = min(row)
        inv = ar.inv(row.pop(pivot_col))
        new_row = {c: ar.norm(v * inv) for c, v in row.items()}
        for other in self.pivots.values():
            coeff = other.pop(pivot_col, 0)
            if coeff == 0:
                continue
            for c, v in new_row.items():
                updated = ar.norm(other.get(c, 0) - coeff * v)
                if updated == 0:
                    other.pop(c, None)
                else:
                    other[c] = updated
        self.pivots[pivot_col] = new_row
        return True

    @property
    def rank(self) -> int:
        return len(self.pivots)


def row_reduce(rows: Iterable[Row], field: Field = RATIONAL) -> Dict[int, Row]:
    """
    Reduced row echelon form of a sparse system.

    Args:
        rows: iterable of {column: coefficient}
        field: scalar field

    Returns:
        pivots: pivot column -> {free column: coefficient}
    """
    eliminator = Eliminator(field)
    for raw in rows:
        eliminator.add(raw)
    return eliminator.pivots


def rank(rows: Iterable[Row], field: Field = RATIONAL) -> int:
    return len(row_reduce(rows, field))


def nullspace(pivots: Dict[int, Row], ncols: int) -> Iterator[Row]:
    """Yield a basis of the solution space, one vector per free column."""
    for f in range(ncols):
        if f in pivots:
            continue
        vec: Row = {f: 1}
        for pc, row in pivots.items():
            coeff = row.get(f, 0)
            if coeff != 0:
                vec[pc] = -coeff
        yield vec


def dense_rows(matrix: Sequence[Sequence]) -> List[Row]:
    return [{j: v for j, v in enumerate(row) if v != 0} for row in matrix]


def rank_mod_p(matrix: np.ndarray, p: int) -> int:
    """Rank of an integer matrix over GF(p); p must stay below 2**21."""
    A = np.mod(np.array(matrix, dtype=np.int64), p)
    nrows, ncols = A.shape
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        nz = np.nonzero(A[r:, c])[0]
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            A[[r, piv]] = A[[piv, r]]
        A[r] = (A[r] * pow(int(A[r, c]), -1, p)) % p
        below = A[r + 1:, c]
        hit = np.nonzero(below)[0]
        if hit.size:
            idx = r + 1 + hit
            A[idx] = (A[idx] - np.outer(below[hit], A[r])) % p
        r += 1
    return r


def matrix_rank(matrix, field: Field) -> int:
    """Rank of a dense matrix over `field`."""
    arr = np.asarray(matrix)
    if arr.size == 0:
        return 0
    if isinstance(field, PrimeField):
        return rank_mod_p(field.array(arr), field.p)
    if not field.exact:
        return int(np.linalg.matrix_rank(np.asarray(arr, dtype=np.float64)))
    return rank(dense_rows(arr.tolist()), field)


def left_nullspace(matrix, field: Field = RATIONAL) -> Tuple[Dict[int, Row], int]:
    """
    Row-reduce the transpose of `matrix` so that nullspace() enumerates the
    vectors lam with lam @ matrix == 0.
    """
    arr = np.asarray(matrix, dtype=object)
    return row_reduce(dense_rows(arr.T.tolist()), field), arr.shape[0]


def inverse(matrix, field: Field = RATIONAL) -> np.ndarray:
    """Exact inverse of a square matrix by elimination on [M | I]."""
    arr = np.asarray(matrix, dtype=object)
    size = arr.shape[0]
    rows = []
    for i in range(size):
        row = {j: arr[i, j] for j in range(size) if arr[i, j] != 0}
        row[size + i] = 1
        rows.append(row)
    pivots = row_reduce(rows, field)
    if any(j not in pivots for j in range(size)):
        raise ZeroDivisionError("matrix is singular")
    out = np.empty((size, size), dtype=object)
    for i in range(size):
        row = pivots[i]
        for j in range(size):
            # M x + y = 0 reduces to x_i + sum_j c_ij y_j = 0, so c = M^-1
            out[i, j] = row.get(size + j, 0)
    return field.array(out) if not isinstance(field, PrimeField) else out.astype(np.int64)
