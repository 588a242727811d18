from fractions import Fraction as F
import itertools

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings

from utils.linalg.exactlin import (DimensionError, RationalFormatError, SingularMatrixError, as_mat, cramer_solve,
                                   det, format_rational, identity, independent_columns, inverse, matmul, matvec,
                                   nullspace, parse_rational, rank, replace_column)

rationals = st.fractions(min_value=-5, max_value=5, max_denominator=7)


def matrices(n):
    return st.lists(st.lists(rationals, min_size=n, max_size=n), min_size=n, max_size=n)


def test_parse_and_format():
    assert parse_rational('3/6') == F(1, 2)
    assert parse_rational(' -4 ') == F(-4)
    assert parse_rational(7) == F(7)
    assert format_rational(F(6, 4)) == '3/2'
    assert format_rational(F(-2)) == '-2'
    for bad in ('1/0', '0.5', 'x', '', True, 1.5):
        with pytest.raises(RationalFormatError):
            parse_rational(bad)


def test_det_examples():
    assert det(as_mat([[F(5, 3)]])) == F(5, 3)
    assert det(identity(2)) == 1
    assert det(as_mat([[1, 2], [3, 4]])) == -2
    assert det(as_mat([[0, 1], [1, 0]])) == -1
    assert det(as_mat([[1, 2], [2, 4]])) == 0
    with pytest.raises(DimensionError):
        det(as_mat([[1, 2, 3], [4, 5, 6]]))


def test_matrices_are_read_only():
    m = as_mat([[1, 2], [3, 4]])
    with pytest.raises(ValueError):
        m[0, 0] = F(9)


def test_replace_column():
    out = replace_column(identity(2), 1, [0, 1])
    assert out.tolist() == [[1, 0], [0, 1]]
    out = replace_column(identity(2), 0, [1, 1])
    assert out.tolist() == [[1, 0], [1, 1]]
    m = as_mat([[1, 2], [3, 4]])
    assert replace_column(m, 1, m[:, 1]).tolist() == m.tolist()


@settings(max_examples=40, deadline=None)
@given(matrices(3), st.lists(rationals, min_size=3, max_size=3), st.lists(rationals, min_size=3, max_size=3),
       rationals, rationals, st.integers(min_value=0, max_value=2))
def test_det_is_multilinear_in_a_column(B, u, w, a, b, i):
    B = as_mat(B)
    mixed = [a * x + b * y for x, y in zip(u, w)]
    assert det(replace_column(B, i, mixed)) == a * det(replace_column(B, i, u)) + b * det(replace_column(B, i, w))


@settings(max_examples=40, deadline=None)
@given(matrices(3))
def test_column_swap_negates_det(B):
    B = as_mat(B)
    swapped = as_mat(B[:, [1, 0, 2]])
    assert det(swapped) == -det(B)


@settings(max_examples=40, deadline=None)
@given(matrices(3), st.lists(rationals, min_size=3, max_size=3))
def test_cramer_solves_exactly(B, rhs):
    B = as_mat(B)
    if det(B) == 0:
        with pytest.raises(SingularMatrixError):
            cramer_solve(B, rhs)
        return
    x = cramer_solve(B, rhs)
    assert list(matvec(B, x)) == [F(r) for r in rhs]


def test_cramer_examples():
    assert list(cramer_solve(identity(2), [3, 4])) == [3, 4]
    assert list(cramer_solve(as_mat([[2]]), [3])) == [F(3, 2)]
    assert list(cramer_solve(as_mat([[1, 1], [1, -1]]), [0, 2])) == [1, -1]


def test_rank_examples():
    assert rank(as_mat([[0, 0], [0, 0]])).rank == 0
    assert rank(identity(3)).rank == 3
    w = rank(as_mat([[1, 2, 3], [2, 4, 6]]))
    assert w.rank == 1
    assert len(w.rows) == len(w.cols) == 1


def _brute_rank(m):
    rows, cols = m.shape
    for r in range(min(rows, cols), 0, -1):
        for R in itertools.combinations(range(rows), r):
            for C in itertools.combinations(range(cols), r):
                if det(as_mat(m[np.ix_(R, C)])) != 0:
                    return r
    return 0


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=1, max_value=4), st.integers(min_value=1, max_value=4), st.data())
def test_rank_matches_minors(rows, cols, data):
    entries = data.draw(st.lists(st.lists(st.integers(-2, 2), min_size=cols, max_size=cols),
                                 min_size=rows, max_size=rows))
    m = as_mat(entries)
    w = rank(m)
    assert w.rank == _brute_rank(m)
    if w.rank:
        assert det(as_mat(m[np.ix_(w.rows, w.cols)])) != 0


def test_nullspace_and_inverse():
    m = as_mat([[1, 1, 0, 0, 0], [0, 0, 1, 1, 1]])
    K = nullspace(m)
    assert K.shape == (3, 5)
    assert all(v == 0 for v in matmul(m, as_mat(K.T)).flat)
    B = as_mat([[2, 1], [1, 1]])
    assert matmul(B, inverse(B)).tolist() == identity(2).tolist()
    with pytest.raises(SingularMatrixError):
        inverse(as_mat([[1, 2], [2, 4]]))


def test_independent_columns_follow_the_scan_order():
    m = as_mat([[1, 1, 0], [0, 0, 1]])
    assert independent_columns(m, [0, 1, 2]) == [0, 2]
    assert independent_columns(m, [2, 1, 0]) == [2, 1]
