"""
Origin-symmetric polytopes in facet form as sections of a cube, and equilateral sets in their norms.

P = {x : |u_i . x| <= 1 for all i} with f normals in Q^d. x -> U x is an isometry from (R^d, ||.||_P)
onto ker A inside l_inf^f, so any equilateral set of that subspace maps back to one of P.
"""
import itertools
import json
import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from eval.certify import bounds_table, verify_certificate
from modules.equilateral.certificate import EquilateralCertificate
from modules.equilateral.construct1 import construct_bound1
from modules.equilateral.construct2 import construct_bound2
from modules.equilateral.construct3 import construct_bound3
from modules.equilateral.subspace import ConsistencyError, validate
from utils.commons.hparams import hparams
from utils.linalg.exactlin import (RationalFormatError, as_mat, format_rational, inverse, mat_to_json, matmul, matvec,
                                   nullspace, parse_rational, rank, zeros)

logger = logging.getLogger(__name__)


class PolytopeSpecError(ValueError):
    pass


class UnboundedPolytopeError(PolytopeSpecError):
    pass


@dataclass(frozen=True, eq=False)
class PolytopeSpec:
    d: int
    normals: np.ndarray

    @property
    def f(self):
        return self.normals.shape[0]

    def to_json(self):
        return {'d': self.d, 'normals': mat_to_json(self.normals)}


@dataclass(frozen=True, eq=False)
class CubeSection:
    U: np.ndarray
    A: np.ndarray
    back_map: np.ndarray

    @property
    def codim(self):
        return self.A.shape[0]


def validate_polytope(d, normals):
    U = as_mat(normals, cols=d)
    if U.shape[1] != d:
        raise PolytopeSpecError(f"normals must have {d} entries, got {U.shape[1]}")
    f = U.shape[0]
    if f < d:
        raise UnboundedPolytopeError(f"{f} facet pairs cannot bound a {d}-dimensional body")
    seen = set()
    for i, u in enumerate(U):
        key = tuple(u)
        if all(x == 0 for x in key):
            raise PolytopeSpecError(f"normal {i} is zero")
        if key in seen or tuple(-x for x in key) in seen:
            raise PolytopeSpecError(f"normal {i} duplicates an earlier normal up to sign")
        seen.add(key)
    if rank(U).rank < d:
        raise UnboundedPolytopeError(f"normals span a space of dimension {rank(U).rank} < d = {d}")
    return PolytopeSpec(d, U)


def polytope_from_json(obj):
    try:
        d, rows = int(obj['d']), obj['normals']
        normals = [[parse_rational(q) for q in row] for row in rows]
    except (KeyError, TypeError, ValueError, RationalFormatError) as e:
        raise PolytopeSpecError(f"polytope spec needs integer 'd' and rational 'normals': {e}")
    if any(len(row) != d for row in normals):
        raise PolytopeSpecError(f"every normal needs {d} entries")
    return validate_polytope(d, normals)


def load_polytope(path):
    with open(path) as f:
        return polytope_from_json(json.load(f))


def polytope_norm(P, x):
    return max(abs(v) for v in matvec(P.normals, x))


def facet_budget(d):
    """Facet pairs up to which every such polytope is guaranteed d + 1 equilateral points."""
    return 4 * d / 3 - (1 + math.sqrt(8 * d + 9)) / 6


def cube_vertices(d):
    return [tuple(Fraction(s) for s in signs) for signs in itertools.product((1, -1), repeat=d)]


def embed(P):
    U = P.normals
    f, d = U.shape
    A = nullspace(as_mat(U.T, cols=f)) if f > d else as_mat([], cols=f)
    witness = rank(U)
    U_T = as_mat(U[list(witness.rows), :], cols=d)
    back = zeros(d, f)
    inv = inverse(U_T)
    for j, r in enumerate(witness.rows):
        back[:, r] = inv[:, j]
    back = as_mat(back)
    section = CubeSection(U, A, back)
    if A.shape[0] != f - d or (A.size and any(v != 0 for v in matmul(A, U).flat)):
        raise ConsistencyError("kernel basis does not annihilate U")
    return section


@dataclass
class PettyResult:
    certificate: EquilateralCertificate
    section_certificate: EquilateralCertificate
    petty: bool
    guaranteed: bool
    choice: dict


def _candidates(n, k, enum_budget):
    return bounds_table(n, k).ranked(enum_budget)


def _run(spec, row, num_workers):
    """Certificate of one (bound, ell) choice, or None when its construction trips a check."""
    try:
        if row.bound == 1:
            return construct_bound1(spec, num_workers=num_workers)
        if row.bound == 2:
            return construct_bound2(spec, row.ell, num_workers=num_workers)
        return construct_bound3(spec, row.ell, num_workers=num_workers)
    except ConsistencyError as e:
        logger.warning(f'| bound ({row.bound}) with ell = {row.ell} failed: {e}')
        return None


def petty_certificate(P, enum_budget=None, num_workers=None):
    """
    The largest equilateral set the three constructions give for P, re-verified under ||.||_P.

    Feasible (bound, ell) choices run in order of their formula. One that trips a consistency
    check or falls short of its own formula hands over to the next; the largest certificate wins.
    """
    enum_budget = hparams.get('enum_budget', 2 ** 22) if enum_budget is None else enum_budget
    d, f = P.d, P.f
    k = f - d
    section = embed(P)
    if k == 0:
        section_points = cube_vertices(f)
        section_cert = EquilateralCertificate(section_points, Fraction(2), {'kind': 'linf'},
                                              {'construction': 'cube', 'n': f})
        choice = {'bound': 'cube'}
    else:
        spec = validate(section.A)
        section_cert, choice = None, None
        # best formula first; stop at the first certificate that reaches its own formula
        for row in _candidates(f, k, enum_budget):
            cert = _run(spec, row, num_workers)
            if cert is not None and (section_cert is None or cert.size > section_cert.size):
                section_cert = cert
                choice = {'bound': row.bound, 'ell': row.ell, 'formula': row.ceiled}
            if cert is not None and cert.size >= row.ceiled:
                break
            logger.warning(f'| bound ({row.bound}) with ell = {row.ell} fell short of {row.ceiled}; '
                           f'trying the next choice')
        if section_cert is None:
            raise ConsistencyError(f"no construction produced a certificate for f = {f}, k = {k}")
        report = verify_certificate(section_cert, spec)
        if not report.ok:
            raise ConsistencyError(f"cube-section certificate fails verification: {report.failures[:3]}")
    points = [tuple(matvec(section.back_map, x)) for x in section_cert.points]
    for x, y in zip(section_cert.points, points):
        if tuple(matvec(P.normals, y)) != tuple(x):
            raise ConsistencyError("mapped-back point does not reproduce its cube-section coordinates")
    cert = EquilateralCertificate(
        points, section_cert.c, {'kind': 'polytopal', 'normals': mat_to_json(P.normals)},
        {'construction': 'petty', 'd': d, 'f': f, 'choice': choice, 'section_source': section_cert.source},
        stability_checks=section_cert.stability_checks,
        audit={'section_points': [[format_rational(q) for q in x] for x in section_cert.points],
               'section_A': mat_to_json(section.A)})
    report = verify_certificate(cert)
    if not report.ok:
        raise ConsistencyError(f"certificate fails under ||.||_P: {report.failures[:3]}")
    budget = facet_budget(d)
    petty = cert.size >= d + 1
    guaranteed = f <= budget
    if guaranteed and not petty:
        raise ConsistencyError(f"f = {f} is within the facet budget {budget:.3f} but only {cert.size} points found")
    logger.info(f'| polytope d = {d}, f = {f}: {cert.size} points via {choice}, petty = {petty}, '
                f'guaranteed = {guaranteed}')
    return PettyResult(cert, section_cert, petty, guaranteed, choice)
