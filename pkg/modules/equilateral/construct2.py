"""
1-equilateral sets of size >= 1 + 2^-(k-1) * sum_{r<=ell} C(n - k*ell, r) in X = ker A.
"""
import itertools
import logging
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import partial

from modules.equilateral.certificate import LINF, EquilateralCertificate, zero_point
from modules.equilateral.subspace import ConsistencyError, ParameterError, contains, search_I_sigma
from utils.commons.multiprocess_utils import chunked_map
from utils.linalg.exactlin import as_mat, format_rational, inverse, matmul

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WVector2:
    J: tuple
    coords: tuple
    y: tuple


def signed_coefficients(spec, config):
    """Free columns and D with D[t, f] = det B(t, sigma^f b_f) / det B."""
    free = list(config.free)
    signed = as_mat([[config.sigma[c] * spec.A[r, c] for c in free] for r in range(spec.k)], cols=len(free))
    return free, matmul(inverse(config.B), signed)


def build_w2(spec, config, J, coeffs=None):
    free, D = coeffs if coeffs is not None else signed_coefficients(spec, config)
    J = tuple(sorted(J))
    if not 1 <= len(J) <= config.ell:
        raise ParameterError(f"|J| must be in [1, {config.ell}], got {J}")
    index = {c: i for i, c in enumerate(free)}
    if any(j not in index for j in J):
        raise ParameterError(f"J = {J} must lie in the free columns {free}")
    k = spec.k
    # B y = b_{J,sigma}, by Cramer column by column
    y = tuple(sum((D[t, index[j]] for j in J), Fraction(0)) for t in range(k))
    coords = [Fraction(0)] * spec.n
    for j in J:
        coords[j] = Fraction(-config.sigma[j])
    for t, block in enumerate(config.blocks):
        for i in block:
            coords[i] = config.sigma[i] * y[t]
    for t in range(k):
        if abs(y[t]) > 1:
            raise ConsistencyError(f"|det B({t}, b_J,sigma)| > det B for J = {J}: search_I_sigma is not stable")
    if y[k - 1] < 0:
        raise ConsistencyError(f"det B({k - 1}, b_J,sigma) < 0 for J = {J}: free signs are not normalised")
    if not contains(spec, coords):
        raise ConsistencyError(f"w({J}) is not in ker A")
    return WVector2(J, tuple(coords), y)


def bound2_value(n, k, ell):
    return 1 + Fraction(sum(math.comb(n - k * ell, r) for r in range(1, ell + 1)), 2 ** (k - 1))


def _orthant(y, k):
    # zero joins the +1 class
    return tuple(1 if y[t] >= 0 else -1 for t in range(k - 1))


def _build_one(spec, config, coeffs, J):
    return build_w2(spec, config, J, coeffs)


def construct_bound2(spec, ell, num_workers=None):
    n, k = spec.n, spec.k
    if ell < 1 or ell * (k + 1) > n:
        raise ParameterError(f"bound (2) needs 1 <= ell <= n/(k+1) = {n}/{k + 1}, got {ell}")
    config = search_I_sigma(spec, ell)
    coeffs = signed_coefficients(spec, config)
    free = list(config.free)
    Js = [J for r in range(1, ell + 1) for J in itertools.combinations(free, r)]
    vectors = chunked_map(partial(_build_one, spec, config, coeffs), Js, num_workers=num_workers,
                          desc='Bound (2) vectors')
    counts = Counter(_orthant(w.y, k) for w in vectors)
    # largest class, then the orthant with the most leading +1 entries
    orthant = min(counts, key=lambda s: (-counts[s], tuple(-x for x in s)))
    members = [w for w in vectors if _orthant(w.y, k) == orthant]
    logger.info(f'| bound (2): ell = {ell}, m = {config.m}, |W| = {len(vectors)}, {len(counts)} orthant classes, '
                f'keeping {len(members)} + 0')
    points = [spec.to_original(w.coords) for w in members] + [zero_point(n)]
    bound = bound2_value(n, k, ell)
    ceiled = math.ceil(bound)
    if len(points) < ceiled:
        raise ConsistencyError(f"bound (2) produced {len(points)} points, below {ceiled}")
    source = {
        'construction': 'bound2',
        'n': n, 'k': k, 'ell': ell, 'm': config.m,
        'blocks': [[spec.column_order[c] for c in b] for b in config.blocks],
        'orthant': list(orthant),
        'class_size': len(members),
        'bound': format_rational(bound),
        'ceiled': ceiled,
    }
    return EquilateralCertificate(points, Fraction(1), dict(LINF), source, stability_checks=[config.record],
                                  audit={'orthant_classes': {str(list(s)): c for s, c in sorted(counts.items())}})
