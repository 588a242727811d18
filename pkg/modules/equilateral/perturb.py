"""
Equilateral sets of size N = n - k(2 + ell) in a norm Y that is (1 + c)-close to X = ker A.

For eps in [0, c]^M (M the pairs i < j of [N]) vectors p_j(eps) in X satisfy
    p_j^j = -1,  p_j^i = eps_ij (i < j),  p_j^i = 0 (j < i < N),  |tail| <= 1/2,
so ||p_i - p_j||_inf = 1 + eps_ij. The map phi_ij(eps) = 1 + eps_ij - ||p_i - p_j||_Y sends the box
into itself; at a fixed point every Y-distance is 1. The fixed point is searched for by damped
iteration, then solved exactly on the affine piece the iteration ends on.
"""
import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from modules.equilateral.certificate import EquilateralCertificate
from modules.equilateral.subspace import ConsistencyError, ParameterError, block_pivot, contains
from utils.commons.hparams import hparams
from utils.linalg.exactlin import (RationalFormatError, SingularMatrixError, as_mat, cramer_solve,
                                   format_rational, inverse, matmul, nullspace, parse_rational)

logger = logging.getLogger(__name__)

HALF = Fraction(1, 2)


class SandwichViolationError(ValueError):
    pass


class NormSpecError(ValueError):
    pass


class NonConvergenceError(RuntimeError):
    def __init__(self, msg, report):
        super().__init__(msg)
        self.report = report


######################
# norms
######################
@dataclass(frozen=True)
class PerturbedNorm:
    """||x||_Y = max_i |F_i . x| with F = diag(weights) or the given normals; ||x||_Y <= ||x||_inf <= (1+c)||x||_Y."""
    kind: str
    c: Fraction
    weights: tuple = None
    normals: tuple = None

    def functionals(self, n):
        if self.kind == 'weighted_linf':
            if len(self.weights) != n:
                raise NormSpecError(f"{len(self.weights)} weights for n = {n}")
            return as_mat([[self.weights[i] if j == i else 0 for j in range(n)] for i in range(n)])
        if any(len(u) != n for u in self.normals):
            raise NormSpecError(f"normals must have n = {n} entries")
        return as_mat(self.normals)

    def norm(self, x):
        if self.kind == 'weighted_linf':
            return max(w * abs(Fraction(v)) for w, v in zip(self.weights, x))
        F = self.functionals(len(x))
        return max(abs(sum((F[i, j] * Fraction(x[j]) for j in range(len(x))), Fraction(0)))
                   for i in range(F.shape[0]))

    def to_json(self):
        if self.kind == 'weighted_linf':
            params = {'weights': [format_rational(w) for w in self.weights]}
        else:
            params = {'normals': [[format_rational(q) for q in u] for u in self.normals]}
        return {'kind': self.kind, 'c': format_rational(self.c), 'params': params}


def weighted_linf_norm(weights, c):
    weights = tuple(parse_rational(w) if isinstance(w, str) else Fraction(w) for w in weights)
    if any(w <= 0 for w in weights):
        raise NormSpecError("weights must be positive")
    return PerturbedNorm('weighted_linf', Fraction(c), weights=weights)


def scaled_linf_norm(n, c):
    """(1 + c)^-1 ||.||_inf, the extreme case of the sandwich."""
    c = Fraction(c)
    return weighted_linf_norm([1 / (1 + c)] * n, c)


def polytopal_norm(normals, c):
    normals = tuple(tuple(Fraction(q) for q in u) for u in normals)
    if not normals:
        raise NormSpecError("a polytopal norm needs at least one normal")
    return PerturbedNorm('polytopal', Fraction(c), normals=normals)


def norm_from_json(obj):
    try:
        kind, c, params = obj['kind'], parse_rational(obj['c']), obj['params']
        if kind == 'weighted_linf':
            return weighted_linf_norm([parse_rational(w) for w in params['weights']], c)
        if kind == 'polytopal':
            return polytopal_norm([[parse_rational(q) for q in u] for u in params['normals']], c)
    except (KeyError, TypeError, RationalFormatError) as e:
        raise NormSpecError(f"malformed norm spec: {e}")
    raise NormSpecError(f"unknown norm kind {kind!r}")


def load_norm(path):
    with open(path) as f:
        return norm_from_json(json.load(f))


######################
# eps and the vectors p_j
######################
def pairs(N):
    return [(i, j) for i in range(N) for j in range(i + 1, N)]


@dataclass(frozen=True)
class EpsMatrix:
    N: int
    values: tuple

    @classmethod
    def zeros(cls, N, exact=True):
        z = Fraction(0) if exact else 0.0
        return cls(N, tuple(z for _ in pairs(N)))

    def as_dict(self):
        return dict(zip(pairs(self.N), self.values))

    def get(self, i, j):
        return self.as_dict()[(i, j)]

    def to_json(self):
        return [{'pair': [i, j], 'eps': format_rational(v) if isinstance(v, Fraction) else v}
                for (i, j), v in zip(pairs(self.N), self.values)]


def perturb_parameters(n, k, ell):
    """(N, largest admissible c)."""
    if ell < 1 or ell * k > n - 2 * k:
        raise ParameterError(f"need 1 <= ell <= (n - 2k)/k = {n - 2 * k}/{k}, got {ell}")
    N = n - k * (2 + ell)
    if N < 2:
        raise ParameterError(f"N = n - k(2 + ell) = {N} < 2")
    return N, Fraction(ell, 2 * (N - 1))


def pivot_for(spec, ell):
    N, _ = perturb_parameters(spec.n, spec.k, ell)
    return block_pivot(spec, 2 + ell, N)


def _tail(spec, block, rhs_col):
    if not block.size:
        return ()
    return cramer_solve(block.B, [rhs_col[r] for r in block.rows])


def build_p(spec, pivot, eps, j, ell):
    """p_j(eps) in the columns of ``spec``; ``eps`` exact."""
    N, A = pivot.N, spec.A
    first = pivot.first_part
    if not 0 <= j < N:
        raise ParameterError(f"j = {j} outside [0, {N})")
    values = eps.as_dict()
    coords = [Fraction(0)] * spec.n
    col = first[j]
    coords[col] = Fraction(-1)
    half_b = [HALF * A[r, col] for r in range(spec.k)]
    for m in (0, 1):
        block = pivot.blocks[m]
        for c, v in zip(block.columns, _tail(spec, block, half_b)):
            coords[c] += v
    s = [sum((values[(r, j)] / ell * A[row, first[r]] for r in range(j)), Fraction(0)) for row in range(spec.k)]
    for r in range(j):
        coords[first[r]] = values[(r, j)]
    for m in range(2, 2 + ell):
        block = pivot.blocks[m]
        for c, v in zip(block.columns, _tail(spec, block, [-x for x in s])):
            coords[c] += v
    tail_cols = set(range(spec.n)) - set(first)
    for c in tail_cols:
        if abs(coords[c]) > HALF:
            raise ConsistencyError(f"p_{j}: tail coordinate {c} = {coords[c]} exceeds 1/2")
    if not contains(spec, coords):
        raise ConsistencyError(f"p_{j} is not in ker A")
    return tuple(coords)


@dataclass(frozen=True)
class AffineForm:
    """p_j(eps) = base[j] + sum_{r<j} eps_rj * G[r] (rows over the columns of the spec)."""
    base: np.ndarray
    G: np.ndarray
    N: int
    ell: int


def affine_form(spec, pivot, ell):
    N, A, k = pivot.N, spec.A, spec.k
    first = pivot.first_part
    base = as_mat([build_p(spec, pivot, EpsMatrix.zeros(N), j, ell) for j in range(N)])
    G = []
    for r in range(N):
        g = [Fraction(0)] * spec.n
        g[first[r]] = Fraction(1)
        rhs = [-A[row, first[r]] / ell for row in range(k)]
        for m in range(2, 2 + ell):
            block = pivot.blocks[m]
            for c, v in zip(block.columns, _tail(spec, block, rhs)):
                g[c] += v
        G.append(g)
    return AffineForm(base, as_mat(G), N, ell)


def _points_exact(form, eps):
    values = eps.as_dict()
    n = form.base.shape[1]
    return [tuple(form.base[j, c] + sum((values[(r, j)] * form.G[r, c] for r in range(j)), Fraction(0))
                  for c in range(n)) for j in range(form.N)]


######################
# phi
######################
def _c_below(c):
    x = float(c)
    return x if Fraction(x) <= c else float(np.nextafter(x, -np.inf))


class FixedPointMap:
    def __init__(self, spec, norm_y, ell, pivot=None, eval_tol=None):
        self.spec = spec
        self.norm_y = norm_y
        self.ell = ell
        self.pivot = pivot if pivot is not None else pivot_for(spec, ell)
        self.form = affine_form(spec, self.pivot, ell)
        self.N = self.pivot.N
        self.pairs = pairs(self.N)
        self.eval_tol = hparams.get('eval_tol', 1e-14) if eval_tol is None else eval_tol
        F = norm_y.functionals(spec.n)
        self.F = F
        # functionals applied to the rows of base and G
        self.FB_exact = matmul(self.form.base, F.T)
        self.FG_exact = matmul(self.form.G, F.T)
        self.FB = self.FB_exact.astype(float)
        self.FG = self.FG_exact.astype(float)
        self.c = norm_y.c
        self.c_float = _c_below(norm_y.c)
        self.excursion = 0.0

    def _lower(self, eps_vec):
        E = np.zeros((self.N, self.N))
        for (i, j), v in zip(self.pairs, eps_vec):
            E[j, i] = v
        return E

    def distances(self, eps_vec):
        """(Y-distances, index of the active functional, its sign) per pair, in float."""
        FP = self.FB + self._lower(eps_vec) @ self.FG
        idx = np.array(self.pairs, dtype=np.int64).reshape(-1, 2)
        diff = FP[idx[:, 0]] - FP[idx[:, 1]]
        active = np.argmax(np.abs(diff), axis=1)
        vals = diff[np.arange(len(diff)), active]
        return np.abs(vals), active, np.sign(vals)

    def phi(self, eps_vec):
        dist, _, _ = self.distances(eps_vec)
        out = 1.0 + np.asarray(eps_vec, dtype=float) - dist
        low, high = out.min(initial=0.0), out.max(initial=0.0)
        if low < -self.eval_tol or high > self.c_float + self.eval_tol:
            bad = int(np.argmax(np.maximum(-out, out - self.c_float)))
            raise SandwichViolationError(
                f"phi at pair {self.pairs[bad]} is {out[bad]:.17g}, outside [0, c = {format_rational(self.c)}]; "
                f"the norm does not satisfy its declared sandwich constant")
        self.excursion = max(self.excursion, -low, high - self.c_float)
        return np.clip(out, 0.0, self.c_float)

    def phi_exact(self, eps):
        points = _points_exact(self.form, eps)
        out = []
        for (i, j), e in zip(self.pairs, eps.values):
            d = self.norm_y.norm([a - b for a, b in zip(points[i], points[j])])
            v = 1 + e - d
            if v < 0 or v > self.c:
                raise SandwichViolationError(f"phi at pair {(i, j)} is {format_rational(v)}, outside [0, c]")
            out.append(v)
        return EpsMatrix(self.N, tuple(out))

    def exact_piece(self, eps_vec):
        """Solve the affine piece active at ``eps_vec`` exactly; None when it is singular or leaves the box."""
        _, active, sign = self.distances(eps_vec)
        FB, FG = self.FB_exact, self.FG_exact
        index = {p: t for t, p in enumerate(self.pairs)}
        rows, rhs = [], []
        for t, (i, j) in enumerate(self.pairs):
            a, s = int(active[t]), int(sign[t]) or 1
            row = [Fraction(0)] * len(self.pairs)
            for r in range(i):
                row[index[(r, i)]] += s * FG[r, a]
            for r in range(j):
                row[index[(r, j)]] -= s * FG[r, a]
            rows.append(row)
            rhs.append(1 - s * (FB[i, a] - FB[j, a]))
        try:
            sol = cramer_solve(as_mat(rows), rhs)
        except SingularMatrixError:
            return None
        if any(v < 0 or v > self.c for v in sol):
            return None
        eps = EpsMatrix(self.N, tuple(sol))
        points = _points_exact(self.form, eps)
        for i, j in self.pairs:
            if self.norm_y.norm([a - b for a, b in zip(points[i], points[j])]) != 1:
                return None
        return eps


def phi(spec, norm_y, eps, ell, pivot=None):
    """phi(eps) with exact arithmetic."""
    return FixedPointMap(spec, norm_y, ell, pivot).phi_exact(eps)


######################
# fixed point
######################
@dataclass
class ConvergenceReport:
    converged: bool
    iterations: int
    residuals: list = field(default_factory=list)
    eps: list = field(default_factory=list)
    alpha: float = 1.0
    exact: bool = False
    residual_bound: float = 0.0
    excursion: float = 0.0

    def to_json(self):
        return {
            'converged': self.converged,
            'iterations': self.iterations,
            'residuals': self.residuals,
            'eps': self.eps,
            'alpha': self.alpha,
            'exact': self.exact,
            'residual_bound': self.residual_bound,
            'excursion': self.excursion,
        }


def _check_c(norm_y, n, k, ell):
    N, c_max = perturb_parameters(n, k, ell)
    if norm_y.c < 0 or norm_y.c > c_max:
        raise ParameterError(f"c = {format_rational(norm_y.c)} must lie in [0, ell/(2(N-1))] = "
                             f"[0, {format_rational(c_max)}]")
    return N


def fixed_point_equilateral(spec, norm_y, ell, tol=None, max_iter=None, alpha=None, min_alpha=None, eval_tol=None):
    """
    Iterate eps <- (1 - alpha) eps + alpha phi(eps) from eps = 0 until the step is <= tol.

    alpha is halved (down to ``min_alpha``) after two consecutive growing steps. The certificate
    sits at the last eps where phi was evaluated, so its Y-distances are within the final step of 1.
    Returns (certificate, report); raises NonConvergenceError carrying the report after max_iter.
    """
    tol = hparams.get('tol', 1e-12) if tol is None else tol
    max_iter = hparams.get('max_iter', 200) if max_iter is None else max_iter
    alpha = hparams.get('alpha', 1.0) if alpha is None else alpha
    min_alpha = hparams.get('min_alpha', 2 ** -10) if min_alpha is None else min_alpha
    _check_c(norm_y, spec.n, spec.k, ell)
    fmap = FixedPointMap(spec, norm_y, ell, eval_tol=eval_tol)
    eps = np.zeros(len(fmap.pairs))
    report = ConvergenceReport(False, 0, alpha=alpha)
    prev_step, growing = math.inf, 0
    for it in range(1, max_iter + 1):
        image = fmap.phi(eps)
        step = float(np.max(np.abs(image - eps), initial=0.0))
        report.iterations = it
        report.residuals.append(step)
        if step <= tol:
            report.converged = True
            break
        growing = growing + 1 if step > prev_step else 0
        if growing >= 2:
            alpha = max(alpha / 2, min_alpha)
            growing = 0
            logger.info(f'| iteration {it}: step grew twice, alpha -> {alpha}')
        prev_step = step
        eps = (1 - alpha) * eps + alpha * image
    report.alpha = alpha
    report.eps = [float(v) for v in eps]
    report.excursion = float(fmap.excursion)
    if not report.converged:
        raise NonConvergenceError(f"no fixed point within {max_iter} iterations, last step "
                                  f"{report.residuals[-1]:.3g}", report)
    exact_eps = fmap.exact_piece(eps)
    if exact_eps is not None:
        report.exact = True
        tolerance = Fraction(0)
    else:
        exact_eps = EpsMatrix(fmap.N, tuple(Fraction(float(v)) for v in eps))
        tolerance = Fraction(repr(report.residuals[-1] + fmap.eval_tol * (fmap.N + 1)))
    report.residual_bound = float(tolerance)
    points = [build_p(spec, fmap.pivot, exact_eps, j, ell) for j in range(fmap.N)]
    linf = []
    for (i, j), e in zip(fmap.pairs, exact_eps.values):
        d = max(abs(a - b) for a, b in zip(points[i], points[j]))
        if d != 1 + e:
            raise ConsistencyError(f"||p_{i} - p_{j}||_inf = {d}, expected 1 + eps = {1 + e}")
        linf.append({'pair': [i, j], 'distance': format_rational(d)})
    logger.info(f'| fixed point after {report.iterations} iterations, exact = {report.exact}, '
                f'tolerance = {float(tolerance):.3g}')
    source = {
        'construction': 'perturb',
        'n': spec.n, 'k': spec.k, 'ell': ell, 'N': fmap.N,
        'c': format_rational(norm_y.c),
        'iterations': report.iterations,
        'exact': report.exact,
        'degenerate': fmap.pivot.degenerate,
        'blocks': fmap.pivot.describe(),
        'eps': exact_eps.to_json(),
    }
    norm = {'kind': 'perturbed', 'norm': norm_y.to_json(), 'tolerance': format_rational(tolerance)}
    cert = EquilateralCertificate([spec.to_original(p) for p in points], Fraction(1), norm, source,
                                  stability_checks=list(fmap.pivot.records), audit={'linf_distances': linf})
    return cert, report


######################
# sandwich falsifier
######################
@dataclass
class SandwichReport:
    lower: Fraction
    upper: Fraction
    samples: int
    violations: list
    weight_range_ok: object = None

    @property
    def ok(self):
        return not self.violations

    def to_json(self):
        return {
            'lower': format_rational(self.lower),
            'upper': format_rational(self.upper),
            'samples': self.samples,
            'violations': self.violations,
            'weight_range_ok': self.weight_range_ok,
        }


def coordinate_sections(spec):
    """Orthogonal projections of e_1..e_n onto X."""
    A = spec.A
    G = inverse(matmul(A, as_mat(A.T)))
    P = matmul(as_mat(A.T), matmul(G, A))
    n = spec.n
    return [tuple((Fraction(int(i == j)) - P[j, i]) for j in range(n)) for i in range(n)]


def check_sandwich(spec, norm_y, samples=None, extra=(), seed=None):
    """
    Worst ratios ||x||_Y / ||x||_inf and ||x||_inf / ||x||_Y over a deterministic sample of X.

    Samples: a kernel basis and its pairwise differences, projected coordinate vectors, seeded
    integer combinations of the basis, and ``extra``. Violations are reported, not raised.
    """
    samples = hparams.get('sandwich_samples', 64) if samples is None else samples
    seed = hparams.get('seed', 1234) if seed is None else seed
    c = norm_y.c
    basis = [tuple(row) for row in nullspace(spec.A)]
    xs = list(basis)
    xs += [tuple(a - b for a, b in zip(u, v)) for i, u in enumerate(basis) for v in basis[i + 1:]]
    xs += coordinate_sections(spec)
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        coef = rng.integers(-3, 4, size=len(basis))
        xs.append(tuple(sum((int(a) * u[i] for a, u in zip(coef, basis)), Fraction(0)) for i in range(spec.n)))
    xs += [tuple(Fraction(q) for q in x) for x in extra]
    lower, upper, violations, used = Fraction(0), Fraction(0), [], 0
    for t, x in enumerate(xs):
        inf = max(abs(v) for v in x)
        if inf == 0:
            continue
        used += 1
        y = norm_y.norm(x)
        if y == 0:
            violations.append({'sample': t, 'message': 'nonzero vector of Y-norm 0'})
            continue
        lo, up = y / inf, inf / y
        lower, upper = max(lower, lo), max(upper, up)
        if lo > 1:
            violations.append({'sample': t, 'ratio': format_rational(lo), 'message': '||x||_Y > ||x||_inf'})
        if up > 1 + c:
            violations.append({'sample': t, 'ratio': format_rational(up), 'message': '||x||_inf > (1+c)||x||_Y'})
    weight_range_ok = None
    if norm_y.kind == 'weighted_linf':
        weight_range_ok = all(1 / (1 + c) <= w <= 1 for w in norm_y.weights)
    if violations:
        logger.info(f'| sandwich: {len(violations)} violations over {used} samples, worst ratios '
                    f'({float(lower):.6g}, {float(upper):.6g})')
    return SandwichReport(lower, upper, used, violations, weight_range_ok)
