"""
2-equilateral sets of size >= 2^(n-k) / (n-k)^k in X = ker A.

The free coordinates (everything outside a stable k-column pivot) range over {+1, -1}; the pivot
coordinates solve A w = 0. Tail values are then binned into windows of width 2, one window vector
per point, and the fullest window class is kept.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from modules.equilateral.certificate import LINF, EquilateralCertificate
from modules.equilateral.subspace import ConsistencyError, ParameterError, contains, max_det_columns
from utils.commons.hparams import hparams
from utils.commons.multiprocess_utils import chunks, multiprocess_run_tqdm
from utils.linalg.exactlin import format_rational, inverse, matmul

logger = logging.getLogger(__name__)


class BudgetExceededError(RuntimeError):
    def __init__(self, msg, required, budget, bound_value):
        super().__init__(msg)
        self.required = required
        self.budget = budget
        self.bound_value = bound_value


@dataclass(frozen=True)
class WVector1:
    J: tuple
    coords: tuple


def unit_coefficients(spec, pivot_columns):
    """Free columns and D with D[t, f] = det B(t, b_free[f]) / det B."""
    pivot_columns = list(pivot_columns)
    free = [c for c in range(spec.n) if c not in pivot_columns]
    D = matmul(inverse(spec.A[:, pivot_columns]), spec.A[:, free])
    return free, D


def build_w1(spec, pivot_columns, J, coeffs=None):
    free, D = coeffs if coeffs is not None else unit_coefficients(spec, pivot_columns)
    J = tuple(sorted(J))
    if any(j not in free for j in J):
        raise ParameterError(f"J = {J} must lie in the free columns {free}")
    f = len(free)
    in_J = set(J)
    coords = [Fraction(0)] * spec.n
    signs = []
    for c in free:
        s = 1 if c in in_J else -1
        coords[c] = Fraction(s)
        signs.append(-s)
    for t, p in enumerate(pivot_columns):
        v = sum((s * D[t, i] for i, s in enumerate(signs)), Fraction(0))
        if abs(v) > f:
            raise ConsistencyError(f"tail coordinate {p} = {v} exceeds n - k = {f}; pivot {tuple(pivot_columns)} "
                                   f"is not exchange-stable")
        coords[p] = v
    if not contains(spec, coords):
        raise ConsistencyError(f"w({J}) is not in ker A")
    return WVector1(J, tuple(coords))


def _integer_coefficients(D):
    L = math.lcm(*[q.denominator for q in D.flat]) if D.size else 1
    D_int = [[int(q * L) for q in row] for row in D]
    peak = max((abs(v) for row in D_int for v in row), default=0)
    dtype = np.int64 if 4 * (len(D_int[0]) + 1) * (peak + 1) * L < 2 ** 62 else object
    return np.array(D_int, dtype=dtype).reshape(D.shape), L


def _window_rows(lo, hi, D_int, L, f):
    """Window vector of every mask in [lo, hi); bit i of a mask puts free column i into J."""
    masks = np.arange(lo, hi, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(f, dtype=np.int64)) & 1).astype(D_int.dtype)
    totals = D_int.sum(axis=1)
    # tail = (sum over free \ J) - (sum over J) of D, scaled by L
    tail = totals[None, :] - 2 * (bits @ D_int.T)
    if np.any(np.abs(tail) > f * L):
        raise ConsistencyError(f"a tail value exceeds n - k = {f} in masks [{lo}, {hi})")
    # window w covers [-f + 2w, -f + 2w + 2]; a value on an edge belongs to the lower window
    num = tail + f * L
    window = -((-num) // (2 * L)) - 1
    return np.maximum(window, 0).astype(np.int64)


def bound1_value(n, k):
    return Fraction(2 ** (n - k), (n - k) ** k)


def construct_bound1(spec, enum_budget=None, num_workers=None):
    enum_budget = hparams.get('enum_budget', 2 ** 22) if enum_budget is None else enum_budget
    num_workers = hparams.get('num_workers', 1) if num_workers is None else num_workers
    n, k = spec.n, spec.k
    f = n - k
    total = 2 ** f
    bound = bound1_value(n, k)
    if total > enum_budget:
        raise BudgetExceededError(
            f"bound (1) enumerates 2^{f} = {total} vectors, budget is {enum_budget} "
            f"(the bound it would certify is {format_rational(bound)})", total, enum_budget, bound)
    pivot = max_det_columns(spec)
    free, D = unit_coefficients(spec, pivot.columns)
    D_int, L = _integer_coefficients(D)
    args = [(lo, hi, D_int, L, f) for lo, hi in chunks(total, hparams.get('chunk_size', 4096))]
    rows = []
    for _, res in multiprocess_run_tqdm(_window_rows, args, num_workers, multithread=hparams.get('multithread', False),
                                        desc='Bound (1) windows', disable=not hparams.get('progress', False)):
        rows.append(res)
    rows = np.concatenate(rows).reshape(total, k)
    # classes in lexicographic window order; argmax keeps the lowest among the fullest
    windows, counts = np.unique(rows, axis=0, return_counts=True)
    if counts.sum() != total:
        raise ConsistencyError(f"window classes hold {counts.sum()} vectors, expected {total}")
    best = windows[int(np.argmax(counts))]
    members = np.nonzero((rows == best).all(axis=1))[0]
    logger.info(f'| bound (1): {total} vectors, {len(counts)} nonempty windows, '
                f'largest holds {len(members)}')
    coeffs = (free, D)
    points = []
    for mask in members.tolist():
        J = tuple(c for i, c in enumerate(free) if (mask >> i) & 1)
        points.append(spec.to_original(build_w1(spec, pivot.columns, J, coeffs).coords))
    ceiled = math.ceil(bound)
    if len(points) < ceiled:
        raise ConsistencyError(f"bound (1) class has {len(points)} points, below {ceiled}")
    source = {
        'construction': 'bound1',
        'n': n, 'k': k,
        'pivot_columns': [spec.column_order[c] for c in pivot.columns],
        'exhaustive_pivot': pivot.exhaustive,
        'window': [-f + 2 * int(w) for w in best],
        'class_size': len(points),
        'bound': format_rational(bound),
        'ceiled': ceiled,
    }
    return EquilateralCertificate(points, Fraction(2), dict(LINF), source,
                                  stability_checks=list(pivot.records),
                                  audit={'nonempty_windows': len(counts)})
