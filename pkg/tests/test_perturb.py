from fractions import Fraction as F

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings

from data_gen.specs import SpecGenerator
from eval.certify import verify_certificate
from modules.equilateral.perturb import (EpsMatrix, NonConvergenceError, NormSpecError, SandwichViolationError,
                                         build_p, check_sandwich, fixed_point_equilateral, norm_from_json, pairs, phi,
                                         perturb_parameters, pivot_for, scaled_linf_norm, weighted_linf_norm)
from modules.equilateral.subspace import ParameterError, validate

H = F(1, 2)
C = F(1, 5)


def ones(n):
    return validate([[1] * n])


def linf_norm(n, c=C):
    return weighted_linf_norm([1] * n, c)


def test_parameters():
    assert perturb_parameters(10, 1, 2) == (6, F(1, 5))
    assert perturb_parameters(6, 1, 1) == (3, F(1, 4))
    with pytest.raises(ParameterError):
        perturb_parameters(10, 1, 9)
    with pytest.raises(ParameterError):
        perturb_parameters(4, 1, 1)


def test_p_at_zero():
    spec = ones(6)
    pivot = pivot_for(spec, 1)
    zero = EpsMatrix.zeros(3)
    assert build_p(spec, pivot, zero, 0, 1) == (-1, 0, 0, H, H, 0)
    assert build_p(spec, pivot, zero, 2, 1) == (0, 0, -1, H, H, 0)


def test_p_with_eps():
    spec = ones(6)
    pivot = pivot_for(spec, 1)
    eps = EpsMatrix(3, (F(1, 4), F(1, 8), F(0)))
    assert eps.get(0, 2) == F(1, 8)
    assert build_p(spec, pivot, eps, 2, 1) == (F(1, 8), 0, -1, H, H, F(-1, 8))


grid = st.integers(min_value=0, max_value=5).map(lambda t: C * t / 5)


@settings(max_examples=30, deadline=None)
@given(st.lists(grid, min_size=15, max_size=15))
def test_linf_distances_are_one_plus_eps(values):
    spec = validate(SpecGenerator(3).random_subspace(10, 1, nonzero=True))
    pivot = pivot_for(spec, 2)
    eps = EpsMatrix(6, tuple(values))
    points = [build_p(spec, pivot, eps, j, 2) for j in range(6)]
    for (i, j), e in zip(pairs(6), values):
        assert max(abs(a - b) for a, b in zip(points[i], points[j])) == 1 + e


def test_phi_closed_forms():
    spec = ones(10)
    eps = EpsMatrix(6, tuple(C * (t % 3) / 2 for t in range(15)))
    assert phi(spec, linf_norm(10), eps, 2).values == EpsMatrix.zeros(6).values
    out = phi(spec, scaled_linf_norm(10, C), eps, 2)
    assert out.values == tuple(C * (1 + e) / (1 + C) for e in eps.values)


def test_linf_converges_at_once():
    spec = ones(10)
    cert, report = fixed_point_equilateral(spec, linf_norm(10), 2)
    assert report.converged and report.iterations == 1 and report.exact
    assert cert.size == 6
    assert all(F(e['eps']) == 0 for e in cert.source['eps'])
    assert verify_certificate(cert, spec).ok


def test_scaled_linf_fixed_point_is_c():
    spec = ones(10)
    cert, report = fixed_point_equilateral(spec, scaled_linf_norm(10, C), 2, tol=1e-12)
    assert report.converged
    assert report.exact
    assert all(F(e['eps']) == C for e in cert.source['eps'])
    assert all(abs(v - 0.2) <= 1e-11 for v in report.eps)
    report = verify_certificate(cert, spec)
    assert report.ok, report.failures[:3]


@pytest.mark.parametrize('seed', range(5))
def test_weighted_norm(seed):
    spec = ones(10)
    norm_y = SpecGenerator(seed).random_norm(10, C)
    cert, report = fixed_point_equilateral(spec, norm_y, 2, tol=1e-12, max_iter=200)
    assert report.converged and report.iterations <= 200
    assert cert.size == 6
    assert F(cert.norm['tolerance']) <= F(1, 10 ** 8)
    for i in range(6):
        for j in range(i):
            d = norm_y.norm([a - b for a, b in zip(cert.points[i], cert.points[j])])
            assert abs(d - 1) <= F(1, 10 ** 8)
    assert verify_certificate(cert, spec).ok


def test_c_above_the_admissible_range():
    with pytest.raises(ParameterError):
        fixed_point_equilateral(ones(10), scaled_linf_norm(10, F(1, 4)), 2)


def test_too_small_weights_are_caught_by_phi():
    spec = ones(10)
    bad = weighted_linf_norm([1 / (1 + 2 * C)] * 10, C)
    with pytest.raises(SandwichViolationError):
        fixed_point_equilateral(spec, bad, 2)


def test_non_convergence_report():
    spec = ones(10)
    with pytest.raises(NonConvergenceError) as e:
        fixed_point_equilateral(spec, scaled_linf_norm(10, C), 2, tol=0.0, max_iter=1)
    assert e.value.report.iterations == 1
    assert not e.value.report.converged
    assert len(e.value.report.residuals) == 1


def test_sandwich_ratios():
    spec = ones(10)
    report = check_sandwich(spec, linf_norm(10))
    assert (report.lower, report.upper) == (1, 1) and report.ok
    report = check_sandwich(spec, scaled_linf_norm(10, C))
    assert (report.lower, report.upper) == (1 / (1 + C), 1 + C) and report.ok
    assert report.weight_range_ok
    bad = weighted_linf_norm([1 / (1 + 2 * C)] + [1] * 9, C)
    report = check_sandwich(spec, bad)
    assert not report.ok
    assert report.upper > 1 + C
    assert report.weight_range_ok is False


def test_norm_json():
    norm_y = norm_from_json({'kind': 'weighted_linf', 'c': '1/5', 'params': {'weights': ['5/6', '1']}})
    assert norm_y.weights == (F(5, 6), 1)
    assert norm_y.norm([F(3), F(-2)]) == F(5, 2)
    assert norm_from_json(norm_y.to_json()) == norm_y
    poly = norm_from_json({'kind': 'polytopal', 'c': '0', 'params': {'normals': [['1', '0'], ['1', '1']]}})
    assert poly.norm([1, -3]) == 2
    with pytest.raises(NormSpecError):
        norm_from_json({'kind': 'l2', 'c': '0', 'params': {}})
    with pytest.raises(NormSpecError):
        norm_from_json({'kind': 'weighted_linf', 'c': '1/5', 'params': {'weights': ['0', '1']}})
    with pytest.raises(NormSpecError):
        norm_from_json({'c': '1/5'})


def test_float_and_exact_distances_agree():
    spec = ones(10)
    norm_y = SpecGenerator(9).random_norm(10, C)
    cert, report = fixed_point_equilateral(spec, norm_y, 2)
    eps = np.array(report.eps)
    assert np.all(eps >= 0) and np.all(eps <= 0.2)


@pytest.mark.parametrize('seed', range(5))
@pytest.mark.parametrize('n,k,ell', [(10, 1, 2), (12, 2, 1)])
def test_degenerate_specs_reach_a_fixed_point(seed, n, k, ell):
    spec = validate(SpecGenerator(seed).degenerate_subspace(n, k))
    N, c = perturb_parameters(n, k, ell)
    assert pivot_for(spec, ell).degenerate
    norm_y = SpecGenerator(seed).random_norm(n, c)
    cert, report = fixed_point_equilateral(spec, norm_y, ell, tol=1e-12, max_iter=200)
    assert report.converged and cert.size == N
    assert cert.source['degenerate']
    for i in range(N):
        for j in range(i):
            d = norm_y.norm([a - b for a, b in zip(cert.points[i], cert.points[j])])
            assert abs(d - 1) <= F(1, 10 ** 8)
    report = verify_certificate(cert, spec)
    assert report.ok, report.failures[:3]
