"""Truncated multivariate Taylor arithmetic.

Used to differentiate closed-form kernels exactly: expand K(z, w) as a jet in
the 2n holomorphic variables (z, conj(w)) around an evaluation point, with all
products truncated at a fixed total order.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import ArgumentError

__all__ = ["JetContext"]


@lru_cache(maxsize=32)
def _context_tables(nvars: int, order: int):
    indices: list[tuple[int, ...]] = []
    for total in range(order + 1):
        level = [()]
        for _ in range(nvars):
            level = [t + (k,) for t in level for k in range(total - sum(t) + 1)]
        indices.extend(t for t in level if sum(t) == total)
    pos = {a: i for i, a in enumerate(indices)}
    ii, jj, kk = [], [], []
    for i, a in enumerate(indices):
        for j, b in enumerate(indices):
            if sum(a) + sum(b) <= order:
                ii.append(i)
                jj.append(j)
                kk.append(pos[tuple(x + y for x, y in zip(a, b))])
    return indices, pos, (np.array(ii), np.array(jj), np.array(kk))


class JetContext:
    """Factory for jets in ``nvars`` variables truncated at total ``order``."""

    def __init__(self, nvars: int, order: int = 4):
        if order < 1:
            raise ArgumentError("order must be >= 1")
        self.nvars = nvars
        self.order = order
        self.indices, self.pos, self._mul_table = _context_tables(nvars, order)
        self.size = len(self.indices)

    def const(self, c) -> "Jet":
        coeffs = np.zeros(self.size, dtype=complex)
        coeffs[0] = c
        return Jet(self, coeffs)

    def var(self, i: int, value) -> "Jet":
        coeffs = np.zeros(self.size, dtype=complex)
        coeffs[0] = value
        e = tuple(1 if j == i else 0 for j in range(self.nvars))
        coeffs[self.pos[e]] = 1.0
        return Jet(self, coeffs)


class Jet:
    __slots__ = ("ctx", "coeffs")

    def __init__(self, ctx: JetContext, coeffs: np.ndarray):
        self.ctx = ctx
        self.coeffs = coeffs

    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        return self.ctx.const(other)

    def __add__(self, other):
        other = self._lift(other)
        return Jet(self.ctx, self.coeffs + other.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._lift(other)
        return Jet(self.ctx, self.coeffs - other.coeffs)

    def __rsub__(self, other):
        return self._lift(other).__sub__(self)

    def __neg__(self):
        return Jet(self.ctx, -self.coeffs)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.ctx, self.coeffs * other)
        ii, jj, kk = self.ctx._mul_table
        out = np.zeros_like(self.coeffs)
        np.add.at(out, kk, self.coeffs[ii] * other.coeffs[jj])
        return Jet(self.ctx, out)

    __rmul__ = __mul__

    def power(self, alpha: float) -> "Jet":
        """(c + u)^alpha via the binomial series; needs nonzero constant term.

        The principal power of the constant term is used, which is the right
        branch whenever Re(c) > 0 (true for the kernels handled here).
        """
        c = self.coeffs[0]
        if c == 0:
            raise ArgumentError("power needs a nonzero constant term")
        u = Jet(self.ctx, self.coeffs.copy())
        u.coeffs[0] = 0.0
        u = u * (1.0 / c)
        out = self.ctx.const(1.0)
        term = self.ctx.const(1.0)
        binom = 1.0
        for k in range(1, self.ctx.order + 1):
            binom *= (alpha - (k - 1)) / k
            term = term * u
            out = out + term * binom
        return out * complex(c) ** alpha

    def derivative(self, a) -> complex:
        """The mixed partial derivative of multi-index ``a`` at the base point."""
        a = tuple(int(x) for x in a)
        i = self.ctx.pos.get(a)
        if i is None:
            raise ArgumentError(f"derivative {a} exceeds jet order {self.ctx.order}")
        fact = 1.0
        for x in a:
            fact *= math.factorial(x)
        return complex(self.coeffs[i]) * fact
