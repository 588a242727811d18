"""
Independent exact verification of equilateral-set certificates.

Nothing here calls into the constructions: distances, memberships and determinant comparisons are
all recomputed from the certificate and the spec, with this module's own determinant routine.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from utils.commons.hparams import hparams
from utils.linalg.exactlin import DimensionError, format_rational, parse_rational

logger = logging.getLogger(__name__)


class OracleRefusedError(RuntimeError):
    pass


@dataclass
class VerificationReport:
    ok: bool = True
    size: int = 0
    c: Fraction = Fraction(0)
    checked_pairs: int = 0
    checked_points: int = 0
    checked_records: int = 0
    failures: list = field(default_factory=list)
    evidence: list = field(default_factory=list)

    def fail(self, **entry):
        self.ok = False
        self.failures.append(entry)

    def to_json(self):
        return {
            'ok': self.ok,
            'size': self.size,
            'c': format_rational(self.c),
            'checked_pairs': self.checked_pairs,
            'checked_points': self.checked_points,
            'checked_records': self.checked_records,
            'failures': self.failures,
        }


def linf_distance(x, y):
    if len(x) != len(y):
        raise DimensionError(f"length mismatch: {len(x)} vs {len(y)}")
    return max((abs(Fraction(a) - Fraction(b)) for a, b in zip(x, y)), default=Fraction(0))


######################
# determinants, independent of utils.linalg
######################
def _laplace_det(m):
    n = len(m)
    if n == 0:
        return Fraction(1)
    if n == 1:
        return Fraction(m[0][0])
    total = Fraction(0)
    for j in range(n):
        if m[0][j] == 0:
            continue
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        total += (-1) ** j * Fraction(m[0][j]) * _laplace_det(minor)
    return total


def _gauss_det(m):
    a = [[Fraction(x) for x in row] for row in m]
    n = len(a)
    d = Fraction(1)
    for c in range(n):
        r = next((i for i in range(c, n) if a[i][c] != 0), None)
        if r is None:
            return Fraction(0)
        if r != c:
            a[c], a[r] = a[r], a[c]
            d = -d
        d *= a[c][c]
        for i in range(c + 1, n):
            f = a[i][c] / a[c][c]
            if f:
                for j in range(c, n):
                    a[i][j] -= f * a[c][j]
    return d


def determinant(m):
    m = [list(row) for row in m]
    return _laplace_det(m) if len(m) <= 4 else _gauss_det(m)


######################
# pairwise distances
######################
def _scaled_int(rows):
    """Common-denominator integer matrix of a list of rational rows; object dtype when int64 could overflow."""
    L = 1
    for row in rows:
        for q in row:
            L = math.lcm(L, Fraction(q).denominator)
    ints = [[int(Fraction(q) * L) for q in row] for row in rows]
    peak = max((abs(v) for row in ints for v in row), default=0)
    dtype = np.int64 if 2 * peak + 1 < 2 ** 62 else object
    return np.array(ints, dtype=dtype).reshape(len(rows), len(rows[0]) if rows else 0), L


def _functionals(norm, dim):
    """Rows f with ||x|| = max |f . x| (None for l_inf)."""
    kind = norm.get('kind')
    if kind == 'linf':
        return None
    if kind == 'polytopal':
        return [[parse_rational(q) for q in row] for row in norm['normals']]
    if kind == 'perturbed':
        inner = norm['norm']
        params = inner.get('params', {})
        if inner['kind'] == 'weighted_linf':
            w = [parse_rational(q) for q in params['weights']]
            return [[w[i] if j == i else Fraction(0) for j in range(dim)] for i in range(dim)]
        if inner['kind'] == 'polytopal':
            return [[parse_rational(q) for q in row] for row in params['normals']]
    raise ValueError(f"unknown norm {norm!r}")


def _project(points, F):
    if F is None:
        return [list(p) for p in points]
    return [[sum((f[i] * p[i] for i in range(len(p))), Fraction(0)) for f in F] for p in points]


def _check_pairs_exact(report, Q, c, evidence_cap):
    m = len(Q)
    rows = [list(q) + [c] for q in Q]
    P, L = _scaled_int(rows)
    target = P[0, -1] if m else 0
    P = P[:, :-1]
    for s in range(m - 1):
        diff = np.abs(P[s + 1:] - P[s])
        dist = diff.max(axis=1) if diff.shape[1] else np.zeros(len(diff), dtype=P.dtype)
        arg = diff.argmax(axis=1) if diff.shape[1] else np.zeros(len(diff), dtype=np.int64)
        report.checked_pairs += len(diff)
        bad = np.nonzero(dist != target)[0]
        for b in bad.tolist():
            t = s + 1 + b
            d = Fraction(int(dist[b]), L)
            over = np.nonzero(diff[b] > target)[0]
            if len(over):
                report.fail(pair=[s, t], coordinate=int(over[0]),
                            message=f"coordinate difference {format_rational(Fraction(int(diff[b][over[0]]), L))} "
                                    f"exceeds c = {format_rational(c)}")
            else:
                report.fail(pair=[s, t], coordinate=int(arg[b]),
                            message=f"distance {format_rational(d)} != c = {format_rational(c)}")
        room = evidence_cap - len(report.evidence)
        if room > 0:
            for b in range(min(room, len(diff))):
                report.evidence.append({'pair': [s, s + 1 + b], 'witness_coord': int(arg[b]),
                                        'distance': format_rational(Fraction(int(dist[b]), L))})


def _check_pairs_tolerance(report, Q, c, tol, evidence_cap):
    m = len(Q)
    for s in range(m):
        for t in range(s + 1, m):
            diff = [abs(a - b) for a, b in zip(Q[s], Q[t])]
            i = max(range(len(diff)), key=lambda j: diff[j])
            d = diff[i]
            report.checked_pairs += 1
            if abs(d - c) > tol:
                report.fail(pair=[s, t], coordinate=i,
                            message=f"distance {float(d):.17g} differs from c = {format_rational(c)} by more than "
                                    f"{float(tol):.3g}")
            if len(report.evidence) < evidence_cap:
                report.evidence.append({'pair': [s, t], 'witness_coord': i, 'distance': format_rational(d)})


######################
# membership and stability records
######################
def _check_membership(report, points, A):
    for s, p in enumerate(points):
        report.checked_points += 1
        for r, row in enumerate(A):
            v = sum((a * x for a, x in zip(row, p)), Fraction(0))
            if v != 0:
                report.fail(point=s, row=r, message=f"a_{r} . x = {format_rational(v)}, point is not in ker A")
                break


def _replace(m, slot, col):
    return [row[:slot] + [col[i]] + row[slot + 1:] for i, row in enumerate(m)]


def _check_columns_record(report, rec, A):
    rows, cols = rec['rows'], rec['columns']
    B = [[A[r][c] for c in cols] for r in rows]
    d = determinant(B)
    ex = determinant(_replace(B, rec['slot'], [A[r][rec['candidate']] for r in rows]))
    if d != parse_rational(rec['det']) or ex != parse_rational(rec['det_exchanged']):
        report.fail(record=rec.get('block'), message=f"recorded determinants do not match A for {rec}")
    elif d == 0 or abs(ex) > abs(d):
        report.fail(record=rec.get('block'),
                    message=f"|det B({rec['slot']}, b_{rec['candidate']})| = {format_rational(abs(ex))} "
                            f"> |det B| = {format_rational(abs(d))}")


def _check_i_sigma_record(report, rec, A):
    k, n = len(A), len(A[0])
    blocks, sigma, ell = rec['blocks'], rec['sigma'], rec['ell']
    B = [[sum((sigma[i] * A[r][i] for i in block), Fraction(0)) for block in blocks] for r in range(k)]
    d = determinant(B)
    if d != parse_rational(rec['det']) or d <= 0:
        report.fail(record='i_sigma', message=f"det B = {format_rational(d)} (recorded {rec['det']})")
        return
    used = {i for b in blocks for i in b}
    free = [i for i in range(n) if i not in used]
    for j in range(k):
        vals = sorted((abs(determinant(_replace(B, j, [A[r][i] for r in range(k)]))) for i in free), reverse=True)
        top = sum(vals[:ell], Fraction(0))
        if top > d:
            report.fail(record='i_sigma', slot=j,
                        message=f"top-{ell} sum {format_rational(top)} of |det B({j}, b_i)| exceeds det B")
    for i in free:
        v = determinant(_replace(B, k - 1, [sigma[i] * A[r][i] for r in range(k)]))
        if v < 0:
            report.fail(record='i_sigma', column=i, message=f"det B({k - 1}, sigma^{i} b_{i}) < 0")


def verify_certificate(cert, spec=None, evidence_cap=None):
    """
    Re-derive every claim of ``cert`` from scratch.

    Pairwise: some coordinate (or functional) reaches c and none exceeds it, exactly for l_inf and
    polytopal norms, within the stated tolerance for perturbed ones. With a spec: every point lies
    in ker A and every stability record holds for A.
    """
    evidence_cap = hparams.get('evidence_cap', 200000) if evidence_cap is None else evidence_cap
    report = VerificationReport(size=cert.size, c=Fraction(cert.c))
    points = [tuple(Fraction(q) for q in p) for p in cert.points]
    if len({len(p) for p in points}) > 1:
        report.fail(message="points of different lengths")
        return report
    if report.size >= 2 and report.c <= 0:
        report.fail(message=f"c = {format_rational(report.c)} must be positive")
    try:
        F = _functionals(cert.norm, cert.dim)
    except (KeyError, ValueError) as e:
        report.fail(message=f"unreadable norm: {e}")
        return report
    Q = _project(points, F)
    if cert.norm.get('kind') == 'perturbed':
        tol = parse_rational(cert.norm.get('tolerance', '0'))
        _check_pairs_tolerance(report, Q, report.c, tol, evidence_cap)
    else:
        _check_pairs_exact(report, Q, report.c, evidence_cap)
    if spec is not None:
        A = [[Fraction(q) for q in row] for row in spec.original().A]
        if points and len(points[0]) != len(A[0]):
            report.fail(message=f"points have length {len(points[0])}, spec has n = {len(A[0])}")
            return report
        _check_membership(report, points, A)
        for rec in cert.stability_checks:
            report.checked_records += 1
            if rec.get('kind') == 'columns':
                _check_columns_record(report, rec, A)
            elif rec.get('kind') == 'i_sigma':
                _check_i_sigma_record(report, rec, A)
            else:
                report.fail(message=f"unknown stability record kind {rec.get('kind')!r}")
    if not report.ok:
        logger.info(f'| verification failed: {len(report.failures)} failures, first: {report.failures[0]}')
    return report


######################
# bounds
######################
@dataclass(frozen=True)
class BoundRow:
    bound: int
    ell: object
    raw: Fraction
    ceiled: int


@dataclass
class BoundsTable:
    n: int
    k: int
    rows: list
    best: dict
    petty_target: int
    ceiling: int

    def to_json(self):
        return {
            'n': self.n, 'k': self.k,
            'rows': [{'bound': r.bound, 'ell': r.ell, 'raw': format_rational(r.raw), 'ceiled': r.ceiled}
                     for r in self.rows],
            'best': {str(b): {'ell': r.ell, 'raw': format_rational(r.raw), 'ceiled': r.ceiled}
                     for b, r in sorted(self.best.items())},
            'petty_target': self.petty_target,
            'ceiling': self.ceiling,
        }

    def ranked(self, enum_budget=None):
        """Rows by certified size, then (bound, ell); bound (1) only when 2^(n-k) fits the budget."""
        rows = [r for r in self.rows if r.bound != 1 or enum_budget is None or 2 ** (self.n - self.k) <= enum_budget]
        return sorted(rows, key=lambda r: (-r.ceiled, r.bound, r.ell or 0))


def bounds_table(n, k):
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < n, got k = {k}, n = {n}")
    rows = [BoundRow(1, None, Fraction(2 ** (n - k), (n - k) ** k), 0)]
    for ell in range(1, n // (k + 1) + 1):
        rows.append(BoundRow(2, ell, 1 + Fraction(sum(math.comb(n - k * ell, r) for r in range(1, ell + 1)),
                                                   2 ** (k - 1)), 0))
    for ell in range(1, n // (2 * k + 1) + 1):
        rows.append(BoundRow(3, ell, Fraction(1 + sum(math.comb(n - 2 * k * ell, r) for r in range(1, ell + 1))), 0))
    rows = [BoundRow(r.bound, r.ell, r.raw, math.ceil(r.raw)) for r in rows]
    best = {}
    for r in rows:
        if r.bound not in best or r.ceiled > best[r.bound].ceiled:
            best[r.bound] = r
    return BoundsTable(n, k, rows, best, n - k + 1, 2 ** (n - k))


######################
# brute force oracle
######################
@dataclass(frozen=True)
class OracleResult:
    value: Fraction
    configuration: tuple


def exhaustive_pivot_oracle(spec, mode='columns', ell=None, cap=None):
    """True optimum of |det| by enumeration; refuses instances above ``cap`` configurations."""
    cap = hparams.get('oracle_cap', 1000000) if cap is None else cap
    A = [[Fraction(q) for q in row] for row in spec.original().A]
    k, n = len(A), len(A[0])
    if mode == 'columns':
        if math.comb(n, k) > cap:
            raise OracleRefusedError(f"C({n}, {k}) = {math.comb(n, k)} exceeds the oracle cap {cap}")
        best = None
        for cols in itertools.combinations(range(n), k):
            v = abs(determinant([[A[r][c] for c in cols] for r in range(k)]))
            if best is None or v > best.value:
                best = OracleResult(v, cols)
        return best
    if mode == 'i_sigma':
        if ell is None:
            raise ValueError("mode 'i_sigma' needs ell")
        per_block = sum(math.comb(n, r) * 2 ** r for r in range(1, ell + 1))
        if per_block ** k > cap:
            raise OracleRefusedError(f"about {per_block ** k} configurations exceed the oracle cap {cap}")
        signed = []
        for r in range(1, ell + 1):
            for block in itertools.combinations(range(n), r):
                for signs in itertools.product((1, -1), repeat=r):
                    col = [sum((s * A[row][i] for s, i in zip(signs, block)), Fraction(0)) for row in range(k)]
                    signed.append((frozenset(block), tuple(zip(block, signs)), col))
        best = None

        def search(chosen, used, cols):
            nonlocal best
            if len(chosen) == k:
                v = abs(determinant([[cols[j][r] for j in range(k)] for r in range(k)]))
                if best is None or v > best.value:
                    best = OracleResult(v, tuple(chosen))
                return
            for block, signs, col in signed:
                if not block & used:
                    search(chosen + [signs], used | block, cols + [col])

        search([], frozenset(), [])
        return best
    raise ValueError(f"unknown oracle mode {mode!r}")
