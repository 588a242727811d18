"""
1-equilateral sets of size exactly sum_{r<=ell} C(N, r) + 1, N = n - 2*k*ell, in X = ker A.

Each y(J) is a sum of half-vectors w(J, i), z(J, i): -1/2 at the i-th element of J, with a tail on
one pivot block solving A x = 0. Tails live on distinct blocks, so every tail coordinate of y(J)
has modulus <= 1/2.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import partial

from modules.equilateral.certificate import LINF, EquilateralCertificate, zero_point
from modules.equilateral.subspace import ConsistencyError, ParameterError, block_pivot, contains
from utils.commons.multiprocess_utils import chunked_map
from utils.linalg.exactlin import cramer_solve, format_rational

logger = logging.getLogger(__name__)

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class YVector:
    J: tuple
    coords: tuple
    parts: tuple


def half_part(spec, block, col):
    """-1/2 at ``col`` plus the tail on ``block`` that puts the vector into ker A."""
    coords = [Fraction(0)] * spec.n
    coords[col] = -HALF
    if block.size:
        rhs = [HALF * spec.A[r, col] for r in block.rows]
        tail = cramer_solve(block.B, rhs)
        for c, v in zip(block.columns, tail):
            if abs(v) > HALF:
                raise ConsistencyError(f"block {block.index}: tail coordinate {c} = {v} exceeds 1/2 "
                                       f"for column {col}")
            coords[c] = v
    if not contains(spec, coords):
        raise ConsistencyError(f"block {block.index}: half-vector for column {col} is not in ker A")
    return tuple(coords)


def build_parts(spec, pivot, J, i):
    """(w(J, i), z(J, i)); J holds first-part positions, i is 0-based."""
    J = tuple(sorted(J))
    if not 0 <= i < len(J):
        raise ParameterError(f"i = {i} out of range for J = {J}")
    if 2 * i + 1 >= len(pivot.blocks):
        raise ParameterError(f"|J| = {len(J)} needs {2 * len(J)} blocks, pivot has {len(pivot.blocks)}")
    col = pivot.first_part[J[i]]
    w = half_part(spec, pivot.blocks[2 * i + 1], col)
    z = half_part(spec, pivot.blocks[2 * i], col)
    return w, z


def build_y(spec, pivot, J):
    J = tuple(sorted(J))
    parts = [build_parts(spec, pivot, J, i) for i in range(len(J))]
    coords = [sum((p[0][c] + p[1][c] for p in parts), Fraction(0)) for c in range(spec.n)]
    first = set(pivot.first_part)
    chosen = {pivot.first_part[p] for p in J}
    for c, v in enumerate(coords):
        if c in chosen:
            ok = v == -1
        elif c in first:
            ok = v == 0
        else:
            ok = abs(v) <= HALF
        if not ok:
            raise ConsistencyError(f"y({J}) has coordinate {c} = {v}")
    if not contains(spec, coords):
        raise ConsistencyError(f"y({J}) is not in ker A")
    return YVector(J, tuple(coords), tuple(parts))


def colex_subsets(N, ell):
    Js = [J for r in range(1, ell + 1) for J in itertools.combinations(range(N), r)]
    return sorted(Js, key=lambda J: tuple(reversed(J)))


def bound3_value(n, k, ell):
    return 1 + sum(math.comb(n - 2 * k * ell, r) for r in range(1, ell + 1))


def construct_bound3(spec, ell, num_workers=None):
    n, k = spec.n, spec.k
    if ell < 1 or ell * (2 * k + 1) > n:
        raise ParameterError(f"bound (3) needs 1 <= ell <= n/(2k+1) = {n}/{2 * k + 1}, got {ell}")
    N = n - 2 * k * ell
    pivot = block_pivot(spec, 2 * ell, N)
    Js = colex_subsets(N, ell)
    ys = chunked_map(partial(build_y, spec, pivot), Js, num_workers=num_workers, desc='Bound (3) vectors')
    points = [spec.to_original(y.coords) for y in ys] + [zero_point(n)]
    expected = bound3_value(n, k, ell)
    if len(points) != expected or len(set(points)) != expected:
        raise ConsistencyError(f"bound (3) produced {len(set(points))} distinct points, expected {expected}")
    logger.info(f'| bound (3): ell = {ell}, N = {N}, degenerate = {pivot.degenerate}, {len(points)} points')
    audit = {'parts': [{
        'J': [spec.column_order[pivot.first_part[p]] for p in y.J],
        'w': [[format_rational(q) for q in spec.to_original(w)] for w, _ in y.parts],
        'z': [[format_rational(q) for q in spec.to_original(z)] for _, z in y.parts],
    } for y in ys]}
    source = {
        'construction': 'bound3',
        'n': n, 'k': k, 'ell': ell, 'N': N,
        'degenerate': pivot.degenerate,
        'first_part': [spec.column_order[c] for c in pivot.first_part],
        'blocks': pivot.describe(),
        'bound': str(expected),
        'ceiled': expected,
    }
    return EquilateralCertificate(points, Fraction(1), dict(LINF), source,
                                  stability_checks=list(pivot.records), audit=audit)
