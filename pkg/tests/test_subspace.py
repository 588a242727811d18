from fractions import Fraction as F
import itertools

import pytest

from data_gen.specs import SpecGenerator
from eval.certify import exhaustive_pivot_oracle
from modules.equilateral.subspace import (InvalidSpecError, ParameterError, block_pivot, contains, degenerate_blocks,
                                          max_det_columns, search_I_sigma, spec_from_json, validate)
from utils.linalg.exactlin import as_mat, det, replace_column


def ones(n):
    return validate([[1] * n])


def test_validate():
    spec = ones(4)
    assert (spec.k, spec.n) == (1, 4)
    assert validate([[1, 1, 0, 0, 0], [0, 0, 1, 1, 1]]).k == 2
    with pytest.raises(InvalidSpecError):
        validate([[1, 0], [2, 0]])
    with pytest.raises(InvalidSpecError):
        validate([[1, 2], [3, 4]])


def test_spec_from_json_names_the_bad_entry():
    with pytest.raises(InvalidSpecError, match=r'A\[0\]\[1\]'):
        spec_from_json({'k': 1, 'n': 3, 'A': [['1', '1/0', '2']]})
    with pytest.raises(InvalidSpecError):
        spec_from_json({'k': 2, 'n': 3, 'A': [['1', '1', '2']]})
    spec = spec_from_json({'k': 1, 'n': 3, 'A': [['1/2', '-3', 4]]})
    assert list(spec.A[0]) == [F(1, 2), -3, 4]


def test_contains():
    assert contains(ones(4), (1, -1, 0, 0))
    assert not contains(ones(4), (1, 0, 0, 0))
    assert contains(validate([[1, 1, 0, 0, 0], [0, 0, 1, 1, 1]]), (1, -1, 2, -1, -1))


def test_reordered_maps_back_to_original_columns():
    spec = validate([[1, 2, 3, 4]])
    r = spec.reordered([3, 1, 0, 2])
    assert list(r.A[0]) == [4, 2, 1, 3]
    assert r.to_original((F(40), F(20), F(10), F(30))) == (10, 20, 30, 40)
    assert list(r.original().A[0]) == [1, 2, 3, 4]
    with pytest.raises(InvalidSpecError):
        spec.reordered([0, 0, 1, 2])


def test_max_det_columns_examples():
    pivot = max_det_columns(ones(4))
    assert pivot.columns == (0,) and abs(pivot.det) == 1
    pivot = max_det_columns(validate([[1, 0, 0], [0, 1, 2]]))
    assert pivot.columns == (0, 2) and abs(pivot.det) == 2


def _assert_exchange_stable(spec, columns):
    B = spec.A[:, list(columns)]
    d = abs(det(B))
    for t in range(spec.k):
        for c in range(spec.n):
            if c not in columns:
                assert abs(det(replace_column(B, t, spec.A[:, c]))) <= d


@pytest.mark.parametrize('seed', range(10))
def test_local_search_is_optimal_for_two_rows(seed):
    spec = validate(SpecGenerator(seed).random_subspace(8, 2))
    local = max_det_columns(spec, exhaustive_cap=0)
    assert not local.exhaustive
    _assert_exchange_stable(spec, local.columns)
    best = exhaustive_pivot_oracle(spec, 'columns')
    assert abs(local.det) == best.value
    assert abs(max_det_columns(spec).det) == best.value


@pytest.mark.parametrize('seed', range(5))
def test_local_search_is_exchange_stable_for_three_rows(seed):
    spec = validate(SpecGenerator(seed).random_subspace(9, 3))
    local = max_det_columns(spec, exhaustive_cap=0)
    _assert_exchange_stable(spec, local.columns)
    assert abs(local.det) <= exhaustive_pivot_oracle(spec, 'columns').value


@pytest.mark.parametrize('seed', range(10))
def test_local_search_is_optimal_for_one_row(seed):
    spec = validate(SpecGenerator(seed).random_subspace(9, 1))
    assert abs(max_det_columns(spec, exhaustive_cap=0).det) == exhaustive_pivot_oracle(spec, 'columns').value


def test_search_I_sigma_on_a_hyperplane():
    config = search_I_sigma(ones(4), 1)
    assert config.blocks == ((3,),)
    assert config.sigma == (1, 1, 1, 1)
    assert config.det == 1
    assert config.free == (0, 1, 2)
    with pytest.raises(ParameterError):
        search_I_sigma(ones(4), 3)


def test_search_I_sigma_bounds_every_signed_sum():
    spec = validate([[1, 1, 0, 0, 0, 0], [0, 0, 1, 1, 1, 1]])
    config = search_I_sigma(spec, 2)
    d = config.det
    assert d > 0
    free = config.free
    for r in (1, 2):
        for J in itertools.combinations(free, r):
            col = [sum((config.sigma[i] * spec.A[row, i] for i in J), F(0)) for row in range(spec.k)]
            for j in range(spec.k):
                assert abs(det(replace_column(config.B, j, col))) <= d
    for i in free:
        col = [config.sigma[i] * spec.A[row, i] for row in range(spec.k)]
        assert det(replace_column(config.B, spec.k - 1, col)) >= 0


@pytest.mark.parametrize('seed', range(8))
@pytest.mark.parametrize('ell', [1, 2])
def test_search_I_sigma_matches_the_oracle_for_one_row(seed, ell):
    spec = validate(SpecGenerator(seed).random_subspace(7, 1))
    config = search_I_sigma(spec, ell)
    assert config.det == exhaustive_pivot_oracle(spec, 'i_sigma', ell=ell).value


def test_block_pivot_on_a_hyperplane():
    pivot = block_pivot(ones(4), 2, 2)
    assert not pivot.degenerate
    assert [b.columns for b in pivot.blocks] == [(2,), (3,)]
    assert pivot.first_part == (0, 1)
    with pytest.raises(ParameterError):
        block_pivot(ones(4), 2, 1)


def test_block_pivot_repairs_a_zero_column():
    spec = validate([[1, 1, 1, 0, 1]])
    pivot = block_pivot(spec, 2, 3)
    assert not pivot.degenerate
    for b in pivot.blocks:
        assert det(b.B) != 0
        assert 3 not in b.columns


def test_irreparable_block_switches_to_the_degenerate_recursion():
    spec = validate([[0, 0, 0, 0, 1]])
    pivot = block_pivot(spec, 2, 3)
    assert pivot.degenerate
    assert [b.size for b in pivot.blocks] == [1, 0]
    assert pivot.blocks[0].columns == (4,)
    assert pivot.first_part == (0, 1, 2)


def test_degenerate_blocks_shrink_with_the_rank():
    spec = validate([[1, 2, 0, 1, 0, 0], [0, 0, 0, 0, 1, 0]])
    pivot = degenerate_blocks(spec, 2)
    sizes = [b.size for b in pivot.blocks]
    assert sizes[0] == 2 and sizes[1] == 1
    assert pivot.blocks[1].rows == (0,)
    for b in pivot.blocks:
        if b.size:
            assert det(b.B) != 0


def test_block_records_hold():
    spec = validate(SpecGenerator(3).random_subspace(9, 2, nonzero=True))
    pivot = block_pivot(spec, 2, 5)
    for rec in pivot.records:
        assert abs(F(rec['det_exchanged'])) <= abs(F(rec['det']))
    for b in pivot.blocks:
        B = as_mat(spec.A[list(b.rows)][:, list(b.columns)])
        assert det(B) == det(b.B)
