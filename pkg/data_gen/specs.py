"""Seeded random inputs: subspaces, adversarial degenerate subspaces, polytopes and perturbed norms."""
from fractions import Fraction

import numpy as np

from modules.equilateral.perturb import weighted_linf_norm
from modules.equilateral.polytope import validate_polytope
from utils.linalg.exactlin import as_mat, rank


class GenerationError(Exception):
    pass


class SpecGenerator:
    def __init__(self, seed=1234, max_entry=5, max_tries=100):
        self.rng = np.random.default_rng(seed)
        self.max_entry = max_entry
        self.max_tries = max_tries

    def _entries(self, shape, nonzero=False):
        m = self.max_entry
        if nonzero:
            vals = self.rng.integers(1, m + 1, size=shape) * self.rng.choice([-1, 1], size=shape)
        else:
            vals = self.rng.integers(-m, m + 1, size=shape)
        return vals.tolist()

    def random_subspace(self, n, k, nonzero=False):
        """Full-row-rank integer k x n matrix."""
        if not 1 <= k < n:
            raise GenerationError(f"need 1 <= k < n, got k = {k}, n = {n}")
        for _ in range(self.max_tries):
            A = as_mat(self._entries((k, n), nonzero))
            if rank(A).rank == k:
                return A
        raise GenerationError(f"no full-rank {k}x{n} matrix after {self.max_tries} draws")

    def degenerate_subspace(self, n, k):
        """
        A full-rank matrix whose last row is zero outside a single column, so every k-column
        block avoiding that column is singular. The other columns repeat a few random columns
        and include zero columns.
        """
        if not 1 <= k < n:
            raise GenerationError(f"need 1 <= k < n, got k = {k}, n = {n}")
        for _ in range(self.max_tries):
            rich = int(self.rng.integers(n))
            pool = [self._entries(k - 1) + [0] for _ in range(max(1, k))] + [[0] * k]
            cols = []
            for c in range(n):
                if c == rich:
                    col = self._entries(k - 1) + [int(self.rng.integers(1, self.max_entry + 1))]
                else:
                    col = list(pool[int(self.rng.integers(len(pool)))])
                cols.append(col)
            A = as_mat([[cols[c][r] for c in range(n)] for r in range(k)])
            if rank(A).rank == k:
                return A
        raise GenerationError(f"no full-rank degenerate {k}x{n} matrix after {self.max_tries} draws")

    def random_polytope(self, d, f):
        """Coordinate normals plus f - d distinct random ones."""
        if f < d:
            raise GenerationError(f"need f >= d, got f = {f}, d = {d}")
        normals = [[int(i == j) for j in range(d)] for i in range(d)]
        seen = {tuple(u) for u in normals}
        tries = 0
        while len(normals) < f:
            tries += 1
            if tries > self.max_tries * f:
                raise GenerationError(f"could not draw {f - d} distinct extra normals in dimension {d}")
            u = self.rng.integers(-2, 3, size=d).tolist()
            if not any(u) or tuple(u) in seen or tuple(-x for x in u) in seen:
                continue
            seen.add(tuple(u))
            normals.append(u)
        return validate_polytope(d, normals)

    def random_weights(self, n, c, q=64):
        """Weights in [1/(1+c), 1] on a grid of step (1 - 1/(1+c))/q."""
        c = Fraction(c)
        lo = 1 / (1 + c)
        return [lo + (1 - lo) * Fraction(int(t), q) for t in self.rng.integers(0, q + 1, size=n)]

    def random_norm(self, n, c):
        return weighted_linf_norm(self.random_weights(n, c), c)
