from fractions import Fraction as F

import pytest

from data_gen.specs import SpecGenerator
from eval.certify import verify_certificate
from modules.equilateral.construct3 import (bound3_value, build_parts, build_y, colex_subsets, construct_bound3)
from modules.equilateral.subspace import ParameterError, block_pivot, validate

H = F(1, 2)


def test_parts_on_a_hyperplane():
    spec = validate([[1, 1, 1, 1]])
    pivot = block_pivot(spec, 2, 2)
    w, z = build_parts(spec, pivot, (0,), 0)
    assert w == (-H, 0, 0, H)
    assert z == (-H, 0, H, 0)
    assert build_y(spec, pivot, (1,)).coords == (0, -1, H, H)


def test_hyperplane_points():
    spec = validate([[1, 1, 1, 1]])
    cert = construct_bound3(spec, 1)
    assert cert.points == [(-1, 0, H, H), (0, -1, H, H), (0, 0, 0, 0)]
    assert cert.c == 1
    assert verify_certificate(cert, spec).ok


def test_colex_order():
    assert colex_subsets(3, 2) == [(0,), (1,), (0, 1), (2,), (0, 2), (1, 2)]


def test_ell_out_of_range():
    with pytest.raises(ParameterError):
        construct_bound3(validate([[1, 1, 1, 1]]), 2)


def test_zero_width_degenerate_block():
    spec = validate([[0, 0, 0, 0, 1]])
    cert = construct_bound3(spec, 1)
    assert cert.source['degenerate']
    assert cert.size == bound3_value(5, 1, 1) == 4
    assert verify_certificate(cert, spec).ok


def test_largest_ell():
    spec = validate(SpecGenerator(5).random_subspace(10, 1))
    cert = construct_bound3(spec, 3)
    assert cert.size == bound3_value(10, 1, 3) == 1 + 4 + 6 + 4
    assert verify_certificate(cert, spec).ok


def test_audit_parts_rebuild_the_points():
    spec = validate(SpecGenerator(2).random_subspace(11, 2))
    cert = construct_bound3(spec, 2)
    for entry, y in zip(cert.audit['parts'], cert.points):
        total = [F(0)] * spec.n
        for part in entry['w'] + entry['z']:
            total = [a + F(b) for a, b in zip(total, part)]
        assert tuple(total) == y


@pytest.mark.parametrize('seed', range(5))
@pytest.mark.parametrize('n,k,ell', [(9, 1, 2), (10, 2, 2), (14, 3, 2), (12, 2, 1)])
def test_random_specs_have_exact_size(seed, n, k, ell):
    spec = validate(SpecGenerator(seed).random_subspace(n, k))
    cert = construct_bound3(spec, ell)
    assert cert.size == bound3_value(n, k, ell)
    report = verify_certificate(cert, spec)
    assert report.ok, report.failures[:3]


@pytest.mark.parametrize('seed', range(10))
@pytest.mark.parametrize('n,k', [(6, 1), (9, 2)])
def test_degenerate_specs(seed, n, k):
    spec = validate(SpecGenerator(seed).degenerate_subspace(n, k))
    cert = construct_bound3(spec, 1)
    assert cert.source['degenerate']
    assert cert.size == bound3_value(n, k, 1)
    report = verify_certificate(cert, spec)
    assert report.ok, report.failures[:3]
