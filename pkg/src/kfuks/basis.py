"""Polynomial bases with analytic derivatives.

Two flavors feed the Gram kernel engines: raw monomials (natural for centered
Reinhardt domains, where the Gram matrix is diagonal) and polynomials built by
graded Arnoldi orthonormalization against a discrete measure.  The latter stay
numerically full-rank at degrees where monomial Gram matrices collapse below
float64 resolution, e.g. on off-center domain pieces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError

__all__ = ["graded_multi_indices", "MonomialBasis", "OrthonormalizedBasis"]


def graded_multi_indices(n: int, degree: int, caps=None) -> list[tuple[int, ...]]:
    """Multi-indices of total degree <= degree, graded then lexicographic.

    ``caps`` optionally bounds each coordinate degree separately, in which
    case the total degree bound is dropped (rectangular truncation).
    """
    out: list[tuple[int, ...]] = []
    if caps is not None:
        caps = tuple(int(c) for c in caps)
        if len(caps) != n:
            raise ArgumentError("caps must have one entry per coordinate")
        ranges = [range(c + 1) for c in caps]
        grid = [()]
        for r in ranges:
            grid = [t + (k,) for t in grid for k in r]
        return sorted(grid, key=lambda a: (sum(a), a))
    for total in range(degree + 1):
        level = [()]
        for _ in range(n):
            level = [t + (k,) for t in level for k in range(total - sum(t) + 1)]
        out.extend(sorted(t for t in level if sum(t) == total))
    return out


def derivative_orders(n: int, max_order: int) -> list[tuple[int, ...]]:
    return graded_multi_indices(n, max_order)


@dataclass(eq=False)
class MonomialBasis:
    """Plain monomials z^alpha for a list of multi-indices."""

    n: int
    indices: list[tuple[int, ...]]

    def __post_init__(self):
        self.indices = [tuple(int(x) for x in a) for a in self.indices]
        self._arr = np.array(self.indices, dtype=np.int64).reshape(len(self.indices), self.n)

    def __len__(self):
        return len(self.indices)

    def jets(self, z, max_order: int = 0) -> dict[tuple[int, ...], np.ndarray]:
        """Values of d^a phi_i(z) for all |a| <= max_order; each entry is (M,)."""
        z = np.asarray(z, dtype=complex)
        out = {}
        A = self._arr
        for a in derivative_orders(self.n, max_order):
            av = np.array(a, dtype=np.int64)
            ok = np.all(A >= av, axis=1)
            coeff = np.ones(len(self.indices))
            for j in range(self.n):
                for r in range(a[j]):
                    coeff = coeff * np.where(ok, A[:, j] - r, 0)
            exps = np.where(ok[:, None], A - av, 0)
            vals = np.prod(z[None, :] ** exps, axis=1)
            out[a] = np.where(ok, coeff * vals, 0.0)
        return out

    def values_batch(self, Z: np.ndarray) -> np.ndarray:
        """(M, N) matrix of phi_i(Z_p)."""
        Z = np.asarray(Z, dtype=complex)
        V = np.empty((len(self.indices), Z.shape[0]), dtype=complex)
        maxd = self._arr.max(axis=0)
        pows = [np.vander(Z[:, j], N=maxd[j] + 1, increasing=True).T for j in range(self.n)]
        for i, a in enumerate(self.indices):
            acc = pows[0][a[0]].copy()
            for j in range(1, self.n):
                acc *= pows[j][a[j]]
            V[i] = acc
        return V

    def descriptor(self):
        return {"basis": "monomial", "indices": [list(a) for a in self.indices]}


@dataclass(eq=False)
class OrthonormalizedBasis:
    """Polynomials orthonormalized against a discrete measure, stored as a recurrence.

    Each basis element after the first is (z_j * p_parent - sum h_i p_i)/h_norm,
    so evaluation (and differentiation, via the product rule) never forms
    monomial coefficients.  The span equals the span of the monomials for the
    same multi-index list.
    """

    n: int
    indices: list[tuple[int, ...]]
    parents: list[tuple[int, int]]
    proj: list[np.ndarray]
    norms: np.ndarray
    seed_norm: float

    @classmethod
    def from_points(cls, Z: np.ndarray, weights: np.ndarray, degree: int):
        """Graded Arnoldi with twice-iterated Gram-Schmidt on weighted points."""
        Z = np.asarray(Z, dtype=complex)
        w = np.asarray(weights, dtype=float)
        if Z.ndim != 2 or Z.shape[0] != w.shape[0]:
            raise ArgumentError("points and weights are inconsistent")
        n = Z.shape[1]
        indices = graded_multi_indices(n, degree)
        if len(indices) > Z.shape[0]:
            raise ArgumentError("need at least as many points as basis functions")
        pos = {a: i for i, a in enumerate(indices)}
        M = len(indices)
        P = np.empty((M, Z.shape[0]), dtype=complex)
        seed_norm = float(np.sqrt(w.sum()))
        P[0] = 1.0 / seed_norm
        parents: list[tuple[int, int]] = [(-1, -1)]
        proj: list[np.ndarray] = [np.zeros(0, dtype=complex)]
        norms = np.zeros(M)
        norms[0] = seed_norm
        for k in range(1, M):
            a = indices[k]
            j = next(i for i, x in enumerate(a) if x > 0)
            pa = tuple(x - (1 if i == j else 0) for i, x in enumerate(a))
            pk = pos[pa]
            parents.append((j, pk))
            raw = Z[:, j] * P[pk]
            h = np.zeros(k, dtype=complex)
            for _ in range(2):
                c = (P[:k].conj() * w) @ raw
                raw = raw - c @ P[:k]
                h += c
            nrm = float(np.sqrt(np.real((w * raw.conj()) @ raw)))
            if nrm <= 0 or not np.isfinite(nrm):
                raise ArgumentError(f"degenerate direction at index {a}")
            P[k] = raw / nrm
            proj.append(h)
            norms[k] = nrm
        return cls(n, indices, parents, proj, norms, seed_norm)

    def __len__(self):
        return len(self.indices)

    def jets(self, z, max_order: int = 0) -> dict[tuple[int, ...], np.ndarray]:
        z = np.asarray(z, dtype=complex)
        orders = derivative_orders(self.n, max_order)
        opos = {a: i for i, a in enumerate(orders)}
        M = len(self.indices)
        D = np.zeros((len(orders), M), dtype=complex)
        D[0, 0] = 1.0 / self.seed_norm
        for k in range(1, M):
            j, pk = self.parents[k]
            h = self.proj[k]
            for oi, a in enumerate(orders):
                val = z[j] * D[oi, pk]
                if a[j] > 0:
                    lower = tuple(x - (1 if i == j else 0) for i, x in enumerate(a))
                    val += a[j] * D[opos[lower], pk]
                if len(h):
                    val -= h @ D[oi, :k]
                D[oi, k] = val / self.norms[k]
        return {a: D[oi] for oi, a in enumerate(orders)}

    def values_batch(self, Z: np.ndarray) -> np.ndarray:
        Z = np.asarray(Z, dtype=complex)
        M = len(self.indices)
        P = np.empty((M, Z.shape[0]), dtype=complex)
        P[0] = 1.0 / self.seed_norm
        for k in range(1, M):
            j, pk = self.parents[k]
            raw = Z[:, j] * P[pk]
            if len(self.proj[k]):
                raw = raw - self.proj[k] @ P[:k]
            P[k] = raw / self.norms[k]
        return P

    def descriptor(self):
        return {
            "basis": "orthonormalized",
            "indices": [list(a) for a in self.indices],
        }
