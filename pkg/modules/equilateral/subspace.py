"""
Subspaces X = ker A of l_inf^n and the column pivot searches the constructions rely on.

All searches aim at exchange stability: no single allowed column substitution increases the
determinant of the selected block. Every comparison a search establishes is handed back as a plain
record so that certificates carry it and ``eval/certify.py`` can recompute it.

Column indices used by the searches always refer to the columns of the ``SubspaceSpec`` they were
given; records are written in the original column order of that spec.
"""
import itertools
import json
import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from utils.commons.hparams import hparams
from utils.linalg.exactlin import (RationalFormatError, as_mat, as_vec, det, format_rational,
                                   independent_columns, inverse, mat_to_json, matmul, matvec,
                                   parse_rational, rank)

logger = logging.getLogger(__name__)


class InvalidSpecError(ValueError):
    pass


class ParameterError(ValueError):
    pass


class ConsistencyError(RuntimeError):
    """An emitted object violates an invariant its construction guarantees."""
    pass


@dataclass(frozen=True, eq=False)
class SubspaceSpec:
    A: np.ndarray
    column_order: tuple

    @property
    def k(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]

    def column(self, j, rows=None):
        if rows is None:
            return self.A[:, j]
        return self.A[list(rows), j]

    def reordered(self, order):
        order = list(order)
        if sorted(order) != list(range(self.n)):
            raise InvalidSpecError(f"not a permutation of {self.n} columns: {order}")
        return SubspaceSpec(as_mat(self.A[:, order]), tuple(self.column_order[p] for p in order))

    def to_original(self, x):
        if len(x) != self.n:
            raise InvalidSpecError(f"vector of length {len(x)} for a spec with n = {self.n}")
        out = [Fraction(0)] * self.n
        for p, v in enumerate(x):
            out[self.column_order[p]] = Fraction(v)
        return tuple(out)

    def original(self):
        if self.column_order == tuple(range(self.n)):
            return self
        inv = [0] * self.n
        for p, c in enumerate(self.column_order):
            inv[c] = p
        return SubspaceSpec(as_mat(self.A[:, inv]), tuple(range(self.n)))

    def to_json(self):
        return {'k': self.k, 'n': self.n, 'A': mat_to_json(self.original().A)}


def validate(A):
    A = as_mat(A)
    k, n = A.shape
    if not 1 <= k < n:
        raise InvalidSpecError(f"need 1 <= k < n, got k = {k}, n = {n}")
    r = rank(A).rank
    if r < k:
        raise InvalidSpecError(f"rank(A) = {r} < k = {k}; drop the dependent rows first")
    return SubspaceSpec(A, tuple(range(n)))


def contains(spec, x):
    return all(v == 0 for v in matvec(spec.A, as_vec(x)))


def spec_from_json(obj):
    try:
        k, n, rows = int(obj['k']), int(obj['n']), obj['A']
    except (KeyError, TypeError, ValueError) as e:
        raise InvalidSpecError(f"subspace spec needs integer 'k', 'n' and a matrix 'A': {e}")
    if len(rows) != k or any(len(r) != n for r in rows):
        raise InvalidSpecError(f"A must be {k}x{n}")
    entries = []
    for i, row in enumerate(rows):
        parsed = []
        for j, v in enumerate(row):
            try:
                parsed.append(parse_rational(v))
            except RationalFormatError as e:
                raise InvalidSpecError(f"A[{i}][{j}]: {e}")
        entries.append(parsed)
    return validate(entries)


def load_spec(path):
    with open(path) as f:
        return spec_from_json(json.load(f))


def save_spec(spec, path):
    with open(path, 'w') as f:
        json.dump(spec.to_json(), f, sort_keys=True)
        f.write('\n')


######################
# exchange stability
######################
def _sub(A, rows, cols):
    return as_mat(A[np.ix_(list(rows), list(cols))], cols=len(cols))


def _ratio_matrix(A, rows, block, candidates):
    # ratio[t, c] = det B(t, b_c) / det B
    return matmul(inverse(_sub(A, rows, block)), _sub(A, rows, candidates))


def _stabilize(A, rows, order, block_pos, cand_pos):
    """Swap columns between ``block_pos`` and ``cand_pos`` (positions into ``order``) until stable."""
    swaps = 0
    while cand_pos:
        block = [order[p] for p in block_pos]
        cands = [order[p] for p in cand_pos]
        ratio = _ratio_matrix(A, rows, block, cands)
        best = None
        for t in range(len(block)):
            for c in range(len(cands)):
                v = abs(ratio[t, c])
                if v > 1 and (best is None or v > best[0]):
                    best = (v, t, c)
        if best is None:
            break
        _, t, c = best
        p, q = block_pos[t], cand_pos[c]
        order[p], order[q] = order[q], order[p]
        swaps += 1
    return swaps


def _pair_stabilize(A, rows, order, block_pos, cand_pos):
    """
    Single exchanges, then the best two-for-two exchange, until neither raises |det B|.

    Swapping slots t1, t2 for candidates c1, c2 scales det B by the 2x2 minor of the ratio matrix
    at (t1, t2) x (c1, c2). For k <= 2 a selection stable under both moves is a global maximiser.
    """
    swaps = _stabilize(A, rows, order, block_pos, cand_pos)
    while len(block_pos) >= 2 and len(cand_pos) >= 2:
        block = [order[p] for p in block_pos]
        cands = [order[p] for p in cand_pos]
        ratio = _ratio_matrix(A, rows, block, cands)
        best = None
        for t1, t2 in itertools.combinations(range(len(block)), 2):
            for c1, c2 in itertools.combinations(range(len(cands)), 2):
                v = abs(ratio[t1, c1] * ratio[t2, c2] - ratio[t1, c2] * ratio[t2, c1])
                if v > 1 and (best is None or v > best[0]):
                    best = (v, (t1, t2), (c1, c2))
        if best is None:
            break
        _, ts, cs = best
        for t, c in zip(ts, cs):
            p, q = block_pos[t], cand_pos[c]
            order[p], order[q] = order[q], order[p]
        swaps += 1 + _stabilize(A, rows, order, block_pos, cand_pos)
    return swaps


def exchange_stability_records(spec, rows, block, candidates, label=None):
    """The comparisons |det B(t, b_r)| <= |det B| behind a stable block, one record per (t, r)."""
    A = spec.A
    d = det(_sub(A, rows, block))
    ratio = _ratio_matrix(A, rows, block, candidates) if candidates else None
    records = []
    for t in range(len(block)):
        for c, r in enumerate(candidates):
            records.append({
                'kind': 'columns',
                'block': label,
                'rows': list(rows),
                'columns': [spec.column_order[b] for b in block],
                'slot': t,
                'candidate': spec.column_order[r],
                'det': format_rational(d),
                'det_exchanged': format_rational(d * ratio[t, c]),
            })
    return records


@dataclass(frozen=True)
class ColumnPivot:
    columns: tuple
    B: np.ndarray
    det: Fraction
    exhaustive: bool
    records: tuple


def max_det_columns(spec, exhaustive_cap=None):
    """
    k columns whose determinant no single or double column exchange can increase.

    Up to ``exhaustive_cap`` candidate sets every k-subset is scored and the lexicographically first
    maximiser wins; above it a local search runs from the greedy seed (columns by decreasing largest
    entry) and takes the best violating exchange each round. For k <= 2 both give the optimum.
    """
    if exhaustive_cap is None:
        exhaustive_cap = hparams.get('exhaustive_cap', 200000)
    A, k, n = spec.A, spec.k, spec.n
    rows = tuple(range(k))
    n_sets = 1
    for i in range(k):
        n_sets = n_sets * (n - i) // (i + 1)
    exhaustive = n_sets <= exhaustive_cap
    if exhaustive:
        best, best_val = None, Fraction(-1)
        for cols in itertools.combinations(range(n), k):
            v = abs(det(A[:, list(cols)]))
            if v > best_val:
                best, best_val = list(cols), v
        block = best
    else:
        greedy = sorted(range(n), key=lambda c: (-max(abs(x) for x in A[:, c]), c))
        seed = independent_columns(A, greedy)
        order = seed + [c for c in range(n) if c not in seed]
        swaps = _pair_stabilize(A, rows, order, list(range(k)), list(range(k, n)))
        logger.debug(f'| max_det_columns: local search stabilised after {swaps} exchanges')
        block = order[:k]
    block = sorted(block)
    B = _sub(A, rows, block)
    d = det(B)
    if d == 0:
        raise ConsistencyError("max_det_columns produced a singular selection")
    free = [c for c in range(n) if c not in block]
    records = exchange_stability_records(spec, rows, block, free, label='pivot')
    return ColumnPivot(tuple(block), B, d, exhaustive, tuple(records))


######################
# signed blocks I_1..I_k with signs sigma
######################
@dataclass(frozen=True)
class ISigmaConfig:
    blocks: tuple
    sigma: tuple
    B: np.ndarray
    ell: int
    record: dict

    @property
    def det(self):
        return det(self.B)

    @property
    def m(self):
        return sum(len(b) for b in self.blocks)

    @property
    def free(self):
        used = set(itertools.chain.from_iterable(self.blocks))
        return tuple(c for c in range(len(self.sigma)) if c not in used)


def _signed_block_matrix(A, blocks, sigma):
    k = A.shape[0]
    cols = [[sum((sigma[i] * A[r, i] for i in block), Fraction(0)) for block in blocks] for r in range(k)]
    return as_mat(cols)


def search_I_sigma(spec, ell):
    """
    Disjoint I_1..I_k (each of size <= ell) and signs sigma with det B > 0, B having columns b_{I_j,sigma}.

    Stable means: for every slot j the ell largest |det B(j, b_i)| over the free columns and I_j
    together sum to at most det B. That bounds |det B(j, b_{J,sigma})| for every admissible J and
    every sign pattern. A violating slot becomes the move I_j <- those ell columns, with signs
    making each term positive, which strictly increases det B. Free signs are normalised at the end
    so that det B(k, sigma^j b_j) >= 0.
    """
    A, k, n = spec.A, spec.k, spec.n
    if ell < 1 or ell * (k + 1) > n:
        raise ParameterError(f"ell must satisfy 1 <= ell <= n/(k+1) = {n}/{k + 1}, got {ell}")
    seed = independent_columns(A, reversed(range(n)))
    blocks = [[c] for c in seed]
    sigma = [1] * n
    B = _signed_block_matrix(A, blocks, sigma)
    if det(B) < 0:
        for i in blocks[0]:
            sigma[i] = -1
        B = _signed_block_matrix(A, blocks, sigma)
    moves = 0
    while True:
        d = det(B)
        B_inv = inverse(B)
        used = set(itertools.chain.from_iterable(blocks))
        best = None
        for j in range(k):
            pool = [c for c in range(n) if c not in used] + blocks[j]
            # det B(j, b_c) = det B * (B^-1 b_c)_j
            vals = []
            for c in pool:
                v = d * sum((B_inv[j, r] * A[r, c] for r in range(k)), Fraction(0))
                if v != 0:
                    vals.append((v, c))
            vals.sort(key=lambda vc: (-abs(vc[0]), vc[1]))
            top = vals[:ell]
            s = sum((abs(v) for v, _ in top), Fraction(0))
            if s > d and (best is None or s > best[0]):
                best = (s, j, top)
        if best is None:
            break
        s, j, top = best
        for v, c in top:
            sigma[c] = 1 if v > 0 else -1
        blocks[j] = sorted(c for _, c in top)
        B = _signed_block_matrix(A, blocks, sigma)
        if det(B) != s:
            raise ConsistencyError(f"exchange on slot {j} expected det {s}, got {det(B)}")
        moves += 1
    logger.debug(f'| search_I_sigma: stable after {moves} moves, det B = {det(B)}')
    used = set(itertools.chain.from_iterable(blocks))
    B_inv = inverse(B)
    for c in range(n):
        if c not in used:
            v = sum((B_inv[k - 1, r] * A[r, c] for r in range(k)), Fraction(0))
            sigma[c] = -1 if v < 0 else 1
    blocks = tuple(tuple(sorted(b)) for b in blocks)
    record = {
        'kind': 'i_sigma',
        'blocks': [[spec.column_order[c] for c in b] for b in blocks],
        'sigma': [int(s) for s in spec.to_original(sigma)],
        'ell': ell,
        'det': format_rational(det(B)),
    }
    return ISigmaConfig(blocks, tuple(sigma), B, ell, record)


######################
# block pivots for the sum constructions
######################
@dataclass(frozen=True)
class Block:
    index: int
    positions: tuple
    columns: tuple
    rows: tuple
    B: np.ndarray
    cumulative: int

    @property
    def size(self):
        return len(self.columns)


@dataclass(frozen=True)
class BlockPivot:
    spec: SubspaceSpec
    order: tuple
    blocks: tuple
    N: int
    degenerate: bool
    records: tuple

    @property
    def first_part(self):
        """Columns (of the searched spec) at positions 0..N-1."""
        return self.order[:self.N]

    def describe(self):
        base = self.spec.column_order
        to_orig = {c: base[p] for p, c in enumerate(self.order)}
        return [{
            'index': b.index,
            'columns': [to_orig[c] for c in b.columns],
            'rows': list(b.rows),
            'size': b.size,
            'cumulative': b.cumulative,
        } for b in self.blocks]


def _move_into(order, picked, dest):
    targets = [p for p in dest if p not in picked]
    sources = [p for p in picked if p not in dest]
    for s, t in zip(sources, targets):
        order[s], order[t] = order[t], order[s]


def block_pivot(spec, n_blocks, N):
    """
    Stable k x k blocks at positions N + i*k .. N + (i+1)*k - 1, settled from the last block down.

    A block is stable against every column to its left; blocks to its right are never touched
    again. A singular block is reseeded from independent columns to its left; when none exist the
    search restarts in the degenerate recursion (see ``degenerate_blocks``).
    """
    A, k, n = spec.A, spec.k, spec.n
    if N < 0 or N + n_blocks * k != n:
        raise ParameterError(f"block_pivot needs N + {n_blocks}*k = n, got N = {N}, k = {k}, n = {n}")
    rows = tuple(range(k))
    order = list(range(n))
    for i in reversed(range(n_blocks)):
        lo, hi = N + i * k, N + (i + 1) * k
        if det(A[:, order[lo:hi]]) == 0:
            sub = as_mat(A[:, order[:hi]])
            picked = independent_columns(sub, reversed(range(hi)))
            if len(picked) < k:
                logger.info(f'| block {i} irreparably singular, switching to the degenerate recursion')
                return degenerate_blocks(spec, n_blocks, N)
            _move_into(order, picked, list(range(lo, hi)))
        _stabilize(A, rows, order, list(range(lo, hi)), list(range(lo)))
    blocks, records = [], []
    for i in range(n_blocks):
        lo, hi = N + i * k, N + (i + 1) * k
        cols = tuple(order[lo:hi])
        B = _sub(A, rows, cols)
        if det(B) == 0:
            raise ConsistencyError(f"block {i} singular after pivoting")
        blocks.append(Block(i, tuple(range(lo, hi)), cols, rows, B, (i + 1) * k))
        records.extend(exchange_stability_records(spec, rows, cols, order[:lo], label=i))
    return BlockPivot(spec.reordered(order), tuple(order), tuple(blocks), N, False, tuple(records))


def degenerate_blocks(spec, n_blocks, N=None):
    """
    Right-anchored blocks of shrinking size m_i when some k x k block cannot be made nonsingular.

    Block 0 takes k columns on all rows. Block i then has m_i = rank of the columns still to its
    left (0 once some earlier block was empty), rows S_i from the rank witness, and occupies the
    m_i positions just left of block i-1. Each nonempty block is exchange-stable on its rows
    against every column further left.
    """
    A, k, n = spec.A, spec.k, spec.n
    if N is None:
        N = n - n_blocks * k
    order = list(range(n))
    blocks, records = [], []
    M, m_prev = 0, k
    for i in range(n_blocks):
        avail = n - M
        if m_prev == 0:
            m, rows = 0, ()
        else:
            witness = rank(A[:, order[:avail]])
            m, rows = witness.rank, witness.rows
        if m == 0:
            blocks.append(Block(i, (), (), (), as_mat([], cols=0), M))
            m_prev = 0
            continue
        sub = _sub(A, rows, order[:avail])
        picked = independent_columns(sub, reversed(range(avail)))
        dest = list(range(avail - m, avail))
        _move_into(order, picked, dest)
        _stabilize(A, rows, order, dest, list(range(avail - m)))
        cols = tuple(order[p] for p in dest)
        B = _sub(A, rows, cols)
        if det(B) == 0:
            raise ConsistencyError(f"degenerate block {i} singular on rows {rows}")
        M += m
        blocks.append(Block(i, tuple(dest), cols, tuple(rows), B, M))
        records.extend(exchange_stability_records(spec, rows, cols, order[:avail - m], label=i))
        m_prev = m
    if n - M < N:
        raise ConsistencyError(f"degenerate blocks use {M} columns, leaving fewer than N = {N}")
    logger.info(f'| degenerate blocks: sizes {[b.size for b in blocks]}')
    return BlockPivot(spec.reordered(order), tuple(order), tuple(blocks), N, True, tuple(records))
