"""Exact rational linear algebra.

Matrices are ``flint.fmpq_mat`` values (aliased as ``RatMatrix``).  The
helpers here add the few operations the rest of the package needs on top of
flint: kernels, affine solves, cohomology representatives and coordinate
extraction, all with careful handling of empty shapes.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

import flint

RatMatrix = flint.fmpq_mat
fmpq = flint.fmpq

__all__ = [
    "RatMatrix", "fmpq", "mat", "zeros", "identity", "rank", "rref",
    "kernel", "kernel_basis", "solve_affine", "solve", "hstack", "vstack",
    "block_diag", "submatrix", "select_columns", "is_zero", "to_rows",
    "column", "columns", "cohomology_reps", "complement_columns",
    "coords_modulo", "q_to_str", "q_from_str", "mat_to_json", "mat_from_json",
    "left_kernel", "scalar_mul", "mat_equal",
]


def _q(x) -> fmpq:
    if isinstance(x, fmpq):
        return x
    if isinstance(x, Fraction):
        return fmpq(x.numerator, x.denominator)
    if isinstance(x, str):
        return q_from_str(x)
    return fmpq(x)


def mat(rows: Sequence[Sequence], ncols: int | None = None) -> RatMatrix:
    """Build a matrix from nested rows of ints, Fractions, fmpq or 'p/q' strings."""
    rows = [list(r) for r in rows]
    r = len(rows)
    c = len(rows[0]) if r else (ncols or 0)
    if any(len(row) != c for row in rows):
        raise ValueError("ragged rows")
    return flint.fmpq_mat(r, c, [_q(x) for row in rows for x in row])


def zeros(r: int, c: int) -> RatMatrix:
    return flint.fmpq_mat(r, c)


def identity(n: int) -> RatMatrix:
    m = flint.fmpq_mat(n, n)
    for i in range(n):
        m[i, i] = 1
    return m


def scalar_mul(c, m: RatMatrix) -> RatMatrix:
    if m.nrows() == 0 or m.ncols() == 0:
        return zeros(m.nrows(), m.ncols())
    return m * _q(c)


def to_rows(m: RatMatrix) -> list[list[fmpq]]:
    if m.nrows() == 0:
        return []
    if m.ncols() == 0:
        return [[] for _ in range(m.nrows())]
    return m.tolist()


def is_zero(m: RatMatrix) -> bool:
    if m.nrows() == 0 or m.ncols() == 0:
        return True
    return m == flint.fmpq_mat(m.nrows(), m.ncols())


def mat_equal(a: RatMatrix, b: RatMatrix) -> bool:
    if (a.nrows(), a.ncols()) != (b.nrows(), b.ncols()):
        return False
    if a.nrows() == 0 or a.ncols() == 0:
        return True
    return a == b


def rank(m: RatMatrix) -> int:
    if m.nrows() == 0 or m.ncols() == 0:
        return 0
    return m.rank()


def rref(m: RatMatrix) -> tuple[RatMatrix, list[int]]:
    """Reduced row echelon form and pivot columns (first nonzero, left to right)."""
    r, c = m.nrows(), m.ncols()
    if r == 0 or c == 0:
        return zeros(r, c), []
    R, rk = m.rref()
    pivots = []
    j = 0
    for i in range(rk):
        while R[i, j] == 0:
            j += 1
        pivots.append(j)
        j += 1
    return R, pivots


def kernel(m: RatMatrix) -> RatMatrix:
    """Matrix whose columns form a basis of the null space of m."""
    r, c = m.nrows(), m.ncols()
    if c == 0:
        return zeros(0, 0)
    if r == 0 or is_zero(m):
        return identity(c)
    num, _ = m.numer_denom()
    X, nullity = num.nullspace()
    if nullity == 0:
        return zeros(c, 0)
    rows = X.tolist()
    return flint.fmpq_mat(c, nullity, [fmpq(rows[i][j]) for i in range(c) for j in range(nullity)])


def kernel_basis(m: RatMatrix) -> list[RatMatrix]:
    """Null space basis as a list of column vectors."""
    return columns(kernel(m))


def left_kernel(m: RatMatrix) -> RatMatrix:
    """Rows spanning {y : y m = 0}, returned as a matrix of row vectors."""
    return kernel(m.transpose()).transpose() if m.nrows() else zeros(0, 0)


def column(m: RatMatrix, j: int) -> RatMatrix:
    return flint.fmpq_mat(m.nrows(), 1, [m[i, j] for i in range(m.nrows())])


def columns(m: RatMatrix) -> list[RatMatrix]:
    return [column(m, j) for j in range(m.ncols())]


def select_columns(m: RatMatrix, cols: Sequence[int]) -> RatMatrix:
    r = m.nrows()
    if not cols or r == 0:
        return zeros(r, len(cols))
    rows = m.tolist()
    return flint.fmpq_mat(r, len(cols), [rows[i][j] for i in range(r) for j in cols])


def submatrix(m: RatMatrix, rows_: Sequence[int], cols: Sequence[int]) -> RatMatrix:
    if not rows_ or not cols:
        return zeros(len(rows_), len(cols))
    if len(rows_) * len(cols) * 4 < m.nrows() * m.ncols():
        return flint.fmpq_mat(len(rows_), len(cols), [m[i, j] for i in rows_ for j in cols])
    rows = m.tolist()
    return flint.fmpq_mat(len(rows_), len(cols), [rows[i][j] for i in rows_ for j in cols])


def hstack(ms: Iterable[RatMatrix], nrows: int | None = None) -> RatMatrix:
    ms = list(ms)
    if not ms:
        return zeros(nrows or 0, 0)
    r = ms[0].nrows()
    if any(x.nrows() != r for x in ms):
        raise ValueError("row mismatch in hstack")
    c = sum(x.ncols() for x in ms)
    if r == 0 or c == 0:
        return zeros(r, c)
    lists = [to_rows(x) for x in ms]
    return flint.fmpq_mat(r, c, [e for i in range(r) for L in lists for e in L[i]])


def vstack(ms: Iterable[RatMatrix], ncols: int | None = None) -> RatMatrix:
    ms = list(ms)
    if not ms:
        return zeros(0, ncols or 0)
    c = ms[0].ncols()
    if any(x.ncols() != c for x in ms):
        raise ValueError("column mismatch in vstack")
    r = sum(x.nrows() for x in ms)
    if r == 0 or c == 0:
        return zeros(r, c)
    flat = []
    for x in ms:
        for row in to_rows(x):
            flat.extend(row)
    return flint.fmpq_mat(r, c, flat)


def block_diag(ms: Sequence[RatMatrix]) -> RatMatrix:
    R = sum(x.nrows() for x in ms)
    C = sum(x.ncols() for x in ms)
    out = zeros(R, C)
    i0 = j0 = 0
    for x in ms:
        for i, row in enumerate(to_rows(x)):
            for j, e in enumerate(row):
                if e != 0:
                    out[i0 + i, j0 + j] = e
        i0 += x.nrows()
        j0 += x.ncols()
    return out


def solve_affine(m: RatMatrix, b: RatMatrix):
    """Solve m x = b.

    Returns ``(x, K)`` where x is a particular solution (or None when the
    system is inconsistent) and the columns of K span the kernel of m.
    b may have several columns; then x solves all of them simultaneously or
    is None if any column is unsolvable.
    """
    if m.nrows() != b.nrows():
        raise ValueError(f"dimension mismatch: {m.nrows()} rows vs b of length {b.nrows()}")
    r, c, k = m.nrows(), m.ncols(), b.ncols()
    K = kernel(m) if c else zeros(0, 0)
    if k == 0:
        return zeros(c, 0), K
    if r == 0:
        return zeros(c, k), K
    R, piv = rref(hstack([m, b]))
    if any(p >= c for p in piv):
        return None, K
    x = zeros(c, k)
    for i, p in enumerate(piv):
        for j in range(k):
            x[p, j] = R[i, c + j]
    return x, K


def solve(m: RatMatrix, b: RatMatrix) -> RatMatrix | None:
    return solve_affine(m, b)[0]


def complement_columns(sub: RatMatrix, cand: RatMatrix) -> list[int]:
    """Indices of columns of ``cand`` that extend span(sub) greedily.

    The returned columns are independent modulo span(sub) and span the same
    space as cand modulo span(sub).
    """
    n = cand.ncols()
    if n == 0:
        return []
    s = sub.ncols() if sub.nrows() == cand.nrows() else 0
    M = hstack([sub, cand]) if s else cand
    _, piv = rref(M)
    return [p - s for p in piv if p >= s]


def cohomology_reps(d_in: RatMatrix, d_out: RatMatrix, dim: int | None = None) -> RatMatrix:
    """Cycle representatives for ker(d_out)/im(d_in) as the columns of a matrix.

    ``d_in``: V' -> V and ``d_out``: V -> V''.  Either may have zero rows or
    columns; ``dim`` (the dimension of V) is needed only when both are empty.
    """
    n = dim if dim is not None else (d_out.ncols() if d_out.ncols() or d_out.nrows() else d_in.nrows())
    Z = kernel(d_out) if d_out.nrows() else identity(n)
    if Z.ncols() == 0:
        return zeros(n, 0)
    B = d_in if d_in.ncols() else zeros(n, 0)
    idx = complement_columns(B, Z)
    return select_columns(Z, idx)


def coords_modulo(reps: RatMatrix, boundaries: RatMatrix, v: RatMatrix) -> RatMatrix:
    """Coordinates of the columns of v in the basis ``reps`` modulo span(boundaries).

    Raises ValueError when a column of v is not in span(reps) + span(boundaries).
    """
    k = reps.ncols()
    if v.ncols() == 0:
        return zeros(k, 0)
    n = v.nrows()
    B = boundaries if boundaries.ncols() and boundaries.nrows() == n else zeros(n, 0)
    A = hstack([reps, B]) if B.ncols() else reps
    x, _ = solve_affine(A, v)
    if x is None:
        raise ValueError("vector not in the expected subspace")
    if k == 0:
        return zeros(0, v.ncols())
    return submatrix(x, list(range(k)), list(range(v.ncols())))


def q_to_str(x) -> str:
    x = _q(x)
    p, q = int(x.p), int(x.q)
    return str(p) if q == 1 else f"{p}/{q}"


def q_from_str(s) -> fmpq:
    if isinstance(s, int):
        return fmpq(s)
    s = str(s).strip()
    if "/" in s:
        a, b = s.split("/")
        if int(b) == 0:
            raise ValueError(f"zero denominator in {s!r}")
        return fmpq(int(a), int(b))
    return fmpq(int(s))


def mat_to_json(m: RatMatrix) -> list[list[str]]:
    return [[q_to_str(e) for e in row] for row in to_rows(m)]


def mat_from_json(rows, shape: tuple[int, int] | None = None) -> RatMatrix:
    if not rows:
        return zeros(*(shape or (0, 0)))
    m = mat(rows)
    if shape is not None and (m.nrows(), m.ncols()) != tuple(shape):
        raise ValueError(f"matrix shape {(m.nrows(), m.ncols())} != expected {tuple(shape)}")
    return m
