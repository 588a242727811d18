"""
Exact rational linear algebra.

Matrices are 2-D numpy object arrays of ``fractions.Fraction`` (read-only once built), vectors are
1-D object arrays. Nothing in this module rounds.

>>> det(as_mat([[1, 2], [3, 4]]))
Fraction(-2, 1)
"""
import math
import re
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

_RATIONAL_RE = re.compile(r'^\s*([+-]?\d+)\s*(?:/\s*(\d+))?\s*$')


class DimensionError(ValueError):
    pass


class SingularMatrixError(ZeroDivisionError):
    pass


class RationalFormatError(ValueError):
    pass


def parse_rational(value):
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise RationalFormatError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if not isinstance(value, str):
        raise RationalFormatError(f"not a rational string: {value!r}")
    m = _RATIONAL_RE.match(value.replace('−', '-'))
    if m is None:
        raise RationalFormatError(f"malformed rational {value!r}")
    den = int(m.group(2)) if m.group(2) is not None else 1
    if den == 0:
        raise RationalFormatError(f"zero denominator in {value!r}")
    return Fraction(int(m.group(1)), den)


def format_rational(q):
    return str(Fraction(q))


def _to_fraction(v):
    if isinstance(v, str):
        return parse_rational(v)
    return Fraction(v)


def _freeze(m):
    m.flags.writeable = False
    return m


def as_mat(entries, cols=None):
    if isinstance(entries, np.ndarray) and entries.dtype == object and not entries.flags.writeable:
        if entries.ndim != 2:
            raise DimensionError(f"expected a 2-D matrix, got shape {entries.shape}")
        return entries
    raw = np.array(entries, dtype=object)
    if raw.size == 0:
        rows = raw.shape[0] if raw.ndim >= 1 else 0
        ncols = cols if cols is not None else (raw.shape[1] if raw.ndim == 2 else 0)
        return _freeze(np.empty((rows, ncols), dtype=object))
    if raw.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {raw.shape}")
    out = np.empty(raw.shape, dtype=object)
    for idx, v in np.ndenumerate(raw):
        out[idx] = _to_fraction(v)
    return _freeze(out)


def as_vec(entries):
    raw = list(entries)
    out = np.empty(len(raw), dtype=object)
    for i, v in enumerate(raw):
        out[i] = _to_fraction(v)
    return _freeze(out)


def zeros(rows, cols):
    m = np.empty((rows, cols), dtype=object)
    m.fill(Fraction(0))
    return m


def identity(n):
    m = zeros(n, n)
    for i in range(n):
        m[i, i] = Fraction(1)
    return _freeze(m)


def dot(u, v):
    if len(u) != len(v):
        raise DimensionError(f"length mismatch: {len(u)} vs {len(v)}")
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


def matvec(m, v):
    m = as_mat(m)
    if m.shape[1] != len(v):
        raise DimensionError(f"matrix has {m.shape[1]} columns, vector has length {len(v)}")
    return as_vec(dot(row, v) for row in m)


def matmul(a, b):
    a, b = as_mat(a), as_mat(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    out = zeros(a.shape[0], b.shape[1])
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            out[i, j] = dot(a[i, :], b[:, j])
    return _freeze(out)


def to_integer_rows(m):
    """Scale every row to integers; returns (rows, scale) with det(m) = det(rows) / scale."""
    rows, scale = [], 1
    for row in m:
        lcm = math.lcm(*[q.denominator for q in row]) if len(row) else 1
        rows.append([int(q * lcm) for q in row])
        scale *= lcm
    return rows, scale


def det(m):
    """Fraction-free (Bareiss) elimination on the integer-scaled rows."""
    m = as_mat(m)
    n = m.shape[0]
    if m.shape[1] != n:
        raise DimensionError(f"determinant of non-square matrix {m.shape}")
    if n == 0:
        return Fraction(1)
    a, scale = to_integer_rows(m)
    sign, prev = 1, 1
    for i in range(n - 1):
        if a[i][i] == 0:
            swap = next((r for r in range(i + 1, n) if a[r][i] != 0), None)
            if swap is None:
                return Fraction(0)
            a[i], a[swap] = a[swap], a[i]
            sign = -sign
        piv = a[i][i]
        for r in range(i + 1, n):
            a_ri = a[r][i]
            row_r, row_i = a[r], a[i]
            for c in range(i + 1, n):
                row_r[c] = (row_r[c] * piv - a_ri * row_i[c]) // prev
            row_r[i] = 0
        prev = piv
    return Fraction(sign * a[n - 1][n - 1], scale)


def replace_column(m, i, v):
    m = as_mat(m)
    if not 0 <= i < m.shape[1]:
        raise IndexError(f"column {i} out of range for {m.shape[1]} columns")
    if len(v) != m.shape[0]:
        raise DimensionError(f"replacement column has length {len(v)}, matrix has {m.shape[0]} rows")
    out = m.copy()
    out[:, i] = [_to_fraction(x) for x in v]
    return _freeze(out)


def cramer_solve(b, rhs):
    b = as_mat(b)
    n = b.shape[0]
    if b.shape[1] != n or len(rhs) != n:
        raise DimensionError(f"cramer_solve needs a square system, got {b.shape} and rhs of length {len(rhs)}")
    d = det(b)
    if d == 0:
        raise SingularMatrixError("singular matrix in cramer_solve")
    x = as_vec(det(replace_column(b, j, rhs)) / d for j in range(n))
    if any(lhs != _to_fraction(r) for lhs, r in zip(matvec(b, x), rhs)):
        raise ArithmeticError("cramer_solve back-substitution check failed")
    return x


@dataclass(frozen=True)
class RankWitness:
    rank: int
    rows: tuple
    cols: tuple


def _echelon(m):
    """Row echelon form; returns (reduced rows, pivot columns, original ids of the pivot rows)."""
    a = [list(r) for r in m]
    n_rows = len(a)
    n_cols = m.shape[1]
    row_ids = list(range(n_rows))
    pivots = []
    piv_r = 0
    for c in range(n_cols):
        if piv_r == n_rows:
            break
        r = next((i for i in range(piv_r, n_rows) if a[i][c] != 0), None)
        if r is None:
            continue
        a[piv_r], a[r] = a[r], a[piv_r]
        row_ids[piv_r], row_ids[r] = row_ids[r], row_ids[piv_r]
        fp = a[piv_r][c]
        for i in range(piv_r + 1, n_rows):
            fr = a[i][c]
            if fr == 0:
                continue
            f = fr / fp
            for cc in range(c, n_cols):
                a[i][cc] -= f * a[piv_r][cc]
        pivots.append(c)
        piv_r += 1
    return a, pivots, row_ids[:piv_r]


def rank(m):
    """Exact rank with a witness: det(m[rows][:, cols]) != 0 and len(rows) = len(cols) = rank."""
    m = as_mat(m)
    _, pivots, rows = _echelon(m)
    return RankWitness(len(pivots), tuple(sorted(rows)), tuple(pivots))


def independent_columns(m, order):
    """Greedy basis of the column space, scanning columns in ``order``."""
    m = as_mat(m)
    picked, basis = [], []
    target = rank(m).rank
    for c in order:
        if len(picked) == target:
            break
        # reduce the candidate against the echelon basis built so far
        v = list(m[:, c])
        for piv, bvec in basis:
            if v[piv] != 0:
                f = v[piv] / bvec[piv]
                v = [x - f * y for x, y in zip(v, bvec)]
        piv = next((i for i, x in enumerate(v) if x != 0), None)
        if piv is not None:
            basis.append((piv, v))
            picked.append(c)
    return picked


def rref(m):
    m = as_mat(m)
    a, pivots, _ = _echelon(m)
    for r in reversed(range(len(pivots))):
        c = pivots[r]
        p = a[r][c]
        a[r] = [x / p for x in a[r]]
        for i in range(r):
            f = a[i][c]
            if f != 0:
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
    return a[:len(pivots)], pivots


def nullspace(m):
    """Rows form a basis of {x : m x = 0}."""
    m = as_mat(m)
    n_cols = m.shape[1]
    r, pivots = rref(m)
    basis = []
    for f in (c for c in range(n_cols) if c not in pivots):
        v = [Fraction(0)] * n_cols
        v[f] = Fraction(1)
        for row, pc in zip(r, pivots):
            v[pc] = -row[f]
        basis.append(v)
    return as_mat(basis, cols=n_cols)


def inverse(m):
    """Gauss-Jordan on [m I]."""
    m = as_mat(m)
    n = m.shape[0]
    if m.shape[1] != n:
        raise DimensionError(f"inverse of non-square matrix {m.shape}")
    xi = [list(m[i]) + [Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for i in range(n):
        r = next((j for j in range(i, n) if xi[j][i] != 0), None)
        if r is None:
            raise SingularMatrixError("matrix is singular")
        xi[i], xi[r] = xi[r], xi[i]
        p = xi[i][i]
        xi[i] = [x / p for x in xi[i]]
        for j in range(n):
            if j != i and xi[j][i] != 0:
                f = xi[j][i]
                xi[j] = [x - f * y for x, y in zip(xi[j], xi[i])]
    return as_mat([row[n:] for row in xi], cols=n)


def mat_to_json(m):
    return [[format_rational(q) for q in row] for row in as_mat(m)]
