"""Moments and Gram matrices over bounded domains.

Closed-form moments for the Reinhardt catalog (balls, polydiscs, eggs) reduce
to Beta-function values; everything else integrates an indicator over the
bounding box with either tensor Gauss-Legendre nodes or a Sobol sequence.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import betaln, gammaln
from scipy.stats import qmc

from .domains import Ball, DomainSpec, Egg, Polydisc, ReinhardtMoment
from .errors import ArgumentError, IllConditionedError, UnsupportedError

__all__ = [
    "MomentTable",
    "QuadratureScheme",
    "reinhardt_moments",
    "log_moment",
    "gram_matrix",
    "GramResult",
]


def _as_alpha(alpha, n: int) -> tuple[int, ...]:
    if isinstance(alpha, (int, np.integer)):
        alpha = (int(alpha),)
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != n or any(a < 0 for a in alpha):
        raise ArgumentError(f"bad multi-index {alpha} for dimension {n}")
    return alpha


@dataclass
class MomentTable:
    """Map alpha -> S_alpha = int_Omega |z^alpha|^2 dV (Lebesgue volume units)."""

    n: int
    values: dict[tuple[int, ...], float] = field(default_factory=dict)

    def __getitem__(self, alpha) -> float:
        return self.values[_as_alpha(alpha, self.n)]

    def __contains__(self, alpha) -> bool:
        return _as_alpha(alpha, self.n) in self.values

    def __len__(self):
        return len(self.values)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"alpha_{j}" for j in range(self.n)] + ["moment"])
            for alpha in sorted(self.values):
                w.writerow(list(alpha) + [repr(self.values[alpha])])


def log_moment(domain: DomainSpec, alpha) -> float:
    """log S_alpha for the closed-form Reinhardt catalog (stable for large alpha)."""
    if isinstance(domain, Ball):
        alpha = _as_alpha(alpha, domain.n)
        n, total = domain.n, sum(alpha)
        # S_alpha = pi^n * prod(a_j!) / (n + |a|)! * R^(2|a| + 2n)
        val = n * math.log(math.pi) + sum(gammaln(a + 1) for a in alpha)
        val -= gammaln(n + total + 1)
        val += (2 * total + 2 * n) * math.log(domain.radius)
        return float(val)
    if isinstance(domain, Polydisc):
        alpha = _as_alpha(alpha, domain.n)
        return float(
            sum(
                math.log(math.pi) + (2 * a + 2) * math.log(r) - math.log(a + 1)
                for a, r in zip(alpha, domain.radii)
            )
        )
    if isinstance(domain, Egg):
        j, k = _as_alpha(alpha, 2)
        m = domain.m
        # S_jk = pi^2 / (m (j+1)) * B((k+1)/m, j+2)
        return float(
            2 * math.log(math.pi)
            - math.log(m)
            - math.log(j + 1)
            + betaln((k + 1) / m, j + 2)
        )
    if isinstance(domain, ReinhardtMoment):
        return math.log(domain.moment_rule(_as_alpha(alpha, domain.n)))
    raise UnsupportedError(f"no closed-form moments for {type(domain).__name__}")


def reinhardt_moments(domain: DomainSpec, alphas: Sequence) -> MomentTable:
    """Exact monomial square-norms for Ball, Polydisc, Egg and custom Reinhardt domains."""
    table = MomentTable(domain.n)
    for alpha in alphas:
        a = _as_alpha(alpha, domain.n)
        table.values[a] = math.exp(log_moment(domain, a))
    return table


# ---------------------------------------------------------------------------
# Indicator quadrature
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureScheme:
    """Node recipe for indicator integration over the bounding box.

    ``kind`` is "qmc" (Sobol, scrambled with ``seed``) or "gauss" (tensorized
    Gauss-Legendre; the per-axis count is nodes**(1/dim)). The two-level error
    estimate compares the first half of the node stream with the full stream.
    Fixed seed and chunked fixed-order reduction keep results reproducible.
    """

    kind: str = "qmc"
    nodes: int = 65536
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("qmc", "gauss"):
            raise ArgumentError(f"unknown scheme kind {self.kind!r}")
        if self.nodes < 16:
            raise ArgumentError("scheme needs at least 16 nodes")

    def points_and_weights(self, box: np.ndarray):
        """Real nodes in the box (N, 2n) and a common scalar weight."""
        dim = box.shape[0]
        widths = box[:, 1] - box[:, 0]
        volume = float(np.prod(widths))
        if self.kind == "qmc":
            sampler = qmc.Sobol(d=dim, scramble=True, seed=self.seed)
            n_pow2 = 1 << int(math.ceil(math.log2(self.nodes)))
            U = sampler.random(n_pow2)[: self.nodes]
            X = box[:, 0] + U * widths
            w = np.full(self.nodes, volume / self.nodes)
            return X, w
        per_axis = max(2, int(round(self.nodes ** (1.0 / dim))))
        x1, w1 = np.polynomial.legendre.leggauss(per_axis)
        axes, wts = [], []
        for d in range(dim):
            mid = 0.5 * (box[d, 0] + box[d, 1])
            half = 0.5 * widths[d]
            axes.append(mid + half * x1)
            wts.append(half * w1)
        grids = np.meshgrid(*axes, indexing="ij")
        X = np.stack([g.ravel() for g in grids], axis=1)
        W = np.ones(X.shape[0])
        for d in range(dim):
            W *= np.meshgrid(*wts, indexing="ij")[d].ravel()
        return X, W

    def config_dict(self):
        return {"kind": self.kind, "nodes": self.nodes, "seed": self.seed}


def complex_nodes(domain: DomainSpec, scheme: QuadratureScheme):
    """Scheme nodes as complex points plus weights and the interior mask."""
    box = domain.bounding_box()
    X, w = scheme.points_and_weights(box)
    Z = X[:, 0::2] + 1j * X[:, 1::2]
    if np.isscalar(w) or w.ndim == 0:
        w = np.full(Z.shape[0], float(w))
    mask = domain.contains_batch(Z)
    return Z, w, mask


@dataclass
class GramResult:
    """Hermitian Gram matrix with a two-level quadrature error estimate."""

    matrix: np.ndarray
    basis: list[tuple[int, ...]]
    error_estimate: float
    scheme: QuadratureScheme

    @property
    def size(self):
        return self.matrix.shape[0]


def _monomial_values(Z: np.ndarray, basis: list[tuple[int, ...]]) -> np.ndarray:
    """V[i, p] = Z_p ** basis[i], vectorized over points p."""
    V = np.empty((len(basis), Z.shape[0]), dtype=complex)
    # reuse powers per coordinate
    max_deg = [max((b[j] for b in basis), default=0) for j in range(Z.shape[1])]
    pows = [
        np.vander(Z[:, j], N=max_deg[j] + 1, increasing=True).T for j in range(Z.shape[1])
    ]
    for i, b in enumerate(basis):
        acc = pows[0][b[0]].copy()
        for j in range(1, Z.shape[1]):
            acc *= pows[j][b[j]]
        V[i] = acc
    return V


def _accumulate_gram(V: np.ndarray, w: np.ndarray) -> np.ndarray:
    Vw = V * w
    return Vw @ V.conj().T


def gram_matrix(
    domain: DomainSpec,
    basis: Sequence,
    scheme: QuadratureScheme | None = None,
    threads: int = 1,
    require_pd: bool = True,
) -> GramResult:
    """Gram matrix S[i, j] = <phi_j, phi_i> of monomials z^alpha over the domain.

    Exact diagonal moments are used for the Reinhardt catalog when no scheme
    is given; otherwise the scheme integrates the indicator over the bounding
    box.  The result is symmetrized, carries a two-level error estimate, and
    is checked for positive definiteness.
    """
    basis = [_as_alpha(b, domain.n) for b in basis]
    if len(basis) != len(set(basis)):
        raise ArgumentError("basis multi-indices must be distinct")
    if not basis:
        return GramResult(np.zeros((0, 0), dtype=complex), [], 0.0, scheme or QuadratureScheme())

    if scheme is None:
        table = reinhardt_moments(domain, basis)  # raises UnsupportedError if not closed-form
        S = np.diag([table[b] for b in basis]).astype(complex)
        return GramResult(S, basis, 0.0, QuadratureScheme(nodes=16))

    Z, w, mask = complex_nodes(domain, scheme)
    Zin, win = Z[mask], w[mask]
    if Zin.shape[0] < len(basis):
        raise IllConditionedError(
            f"only {Zin.shape[0]} interior nodes for {len(basis)} basis functions; "
            "increase the node count"
        )

    chunk = max(1024, Zin.shape[0] // max(1, threads * 4))
    ranges = [(s, min(s + chunk, Zin.shape[0])) for s in range(0, Zin.shape[0], chunk)]

    def piece(rg):
        s, e = rg
        return _accumulate_gram(_monomial_values(Zin[s:e], basis), win[s:e])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(piece, ranges))
    else:
        parts = [piece(rg) for rg in ranges]
    # fixed chunk-index reduction order for bit reproducibility
    S = parts[0]
    for p in parts[1:]:
        S = S + p

    half_mask = np.zeros(Zin.shape[0], dtype=bool)
    half_mask[: Zin.shape[0] // 2] = True
    S_half = _accumulate_gram(_monomial_values(Zin[half_mask], basis), win[half_mask]) * (
        Zin.shape[0] / max(1, half_mask.sum())
    )
    err = float(np.linalg.norm(S - S_half) / max(1e-300, np.linalg.norm(S)))

    S = 0.5 * (S + S.conj().T)
    if require_pd:
        lam_min = float(np.linalg.eigvalsh(S).min())
        if lam_min <= 0:
            raise IllConditionedError(
                f"Gram matrix is not positive definite (lambda_min = {lam_min:.3e}); "
                "increase the node count or shrink the basis"
            )
    return GramResult(S, basis, err, scheme)
