"""Randomised sweeps over every construction; run with ``pytest -m slow``."""
import random
from fractions import Fraction as F

import pytest

from data_gen.specs import SpecGenerator
from eval.certify import bounds_table, exhaustive_pivot_oracle, verify_certificate
from modules.equilateral.certificate import EquilateralCertificate, dumps
from modules.equilateral.construct1 import construct_bound1
from modules.equilateral.construct2 import construct_bound2
from modules.equilateral.construct3 import bound3_value, construct_bound3
from modules.equilateral.perturb import fixed_point_equilateral
from modules.equilateral.polytope import cube_vertices, petty_certificate
from modules.equilateral.subspace import max_det_columns, search_I_sigma, validate

pytestmark = pytest.mark.slow


def _construct(spec, row):
    if row.bound == 1:
        return construct_bound1(spec)
    if row.bound == 2:
        return construct_bound2(spec, row.ell)
    return construct_bound3(spec, row.ell)


def _instance(seed):
    rng = random.Random(seed)
    k = rng.randint(1, 3)
    n = rng.randint(k + 3, 14)
    return validate(SpecGenerator(seed).random_subspace(n, k, nonzero=rng.random() < 0.5))


@pytest.mark.parametrize('seed', range(100))
def test_random_instances_meet_every_bound(seed):
    spec = _instance(seed)
    for row in bounds_table(spec.n, spec.k).ranked(enum_budget=2 ** 22):
        cert = _construct(spec, row)
        assert cert.size >= row.ceiled
        if row.bound == 3:
            assert cert.size == bound3_value(spec.n, spec.k, row.ell)
        report = verify_certificate(cert, spec)
        assert report.ok, report.failures[:3]


@pytest.mark.parametrize('seed', range(20))
@pytest.mark.parametrize('n,k', [(7, 1), (10, 2), (12, 3)])
def test_degenerate_instances(seed, n, k):
    spec = validate(SpecGenerator(seed).degenerate_subspace(n, k))
    table = bounds_table(n, k)
    for row in table.rows:
        if row.bound == 1:
            continue
        cert = _construct(spec, row)
        assert cert.size >= row.ceiled
        assert verify_certificate(cert, spec).ok


@pytest.mark.parametrize('d', range(4, 9))
@pytest.mark.parametrize('seed', range(5))
def test_one_extra_facet_is_petty(d, seed):
    result = petty_certificate(SpecGenerator(seed).random_polytope(d, d + 1))
    assert result.petty
    assert verify_certificate(result.certificate).ok


@pytest.mark.parametrize('d', [7, 8])
@pytest.mark.parametrize('seed', range(5))
def test_two_extra_facets_are_petty(d, seed):
    result = petty_certificate(SpecGenerator(seed).random_polytope(d, d + 2))
    assert result.petty and result.certificate.size >= d + 1
    assert verify_certificate(result.certificate).ok


@pytest.mark.parametrize('seed', range(5))
def test_facet_budget_is_guaranteed(seed):
    result = petty_certificate(SpecGenerator(seed).random_polytope(8, 9))
    assert result.guaranteed and result.petty


@pytest.mark.parametrize('m', range(1, 11))
def test_cube(m):
    cert = EquilateralCertificate(cube_vertices(m), F(2), {'kind': 'linf'}, {})
    assert verify_certificate(cert).ok


@pytest.mark.parametrize('seed', range(50))
def test_pivots_match_the_oracle(seed):
    spec = validate(SpecGenerator(seed).random_subspace(8 + 2 * (seed % 2), 1 + (seed // 2) % 2))
    local = max_det_columns(spec, exhaustive_cap=0)
    assert not local.exhaustive
    assert abs(local.det) == exhaustive_pivot_oracle(spec, 'columns').value
    if spec.k == 1:
        assert search_I_sigma(spec, 2).det == exhaustive_pivot_oracle(spec, 'i_sigma', ell=2).value


@pytest.mark.parametrize('seed', range(10))
def test_weighted_norms_on_random_hyperplanes(seed):
    spec = validate(SpecGenerator(seed).random_subspace(10, 1, nonzero=True))
    norm_y = SpecGenerator(seed + 100).random_norm(10, F(1, 5))
    cert, report = fixed_point_equilateral(spec, norm_y, 2, tol=1e-12, max_iter=200)
    assert report.converged and cert.size == 6
    for i in range(6):
        for j in range(i):
            d = norm_y.norm([a - b for a, b in zip(cert.points[i], cert.points[j])])
            assert abs(d - 1) <= F(1, 10 ** 8)
    assert verify_certificate(cert, spec).ok


def test_mutations_are_caught():
    rng = random.Random(0)
    caught = 0
    for t in range(100):
        spec = validate(SpecGenerator(t).random_subspace(9, 2, nonzero=True))
        cert = construct_bound3(spec, 1)
        points = list(cert.points)
        s, i = rng.randrange(len(points)), rng.randrange(spec.n)
        p = list(points[s])
        p[i] += F(rng.choice([-1, 1]), rng.randint(2, 10 ** 6))
        points[s] = tuple(p)
        report = verify_certificate(EquilateralCertificate(points, cert.c, cert.norm, cert.source), spec)
        caught += not report.ok
    assert caught == 100


@pytest.mark.parametrize('seed', range(5))
def test_deterministic_output(seed):
    spec = _instance(seed)
    row = bounds_table(spec.n, spec.k).ranked()[0]
    assert dumps(_construct(spec, row).to_json()) == dumps(_construct(spec, row).to_json())
