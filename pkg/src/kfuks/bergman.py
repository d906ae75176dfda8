"""Bergman kernel engines and minimum integrals.

Engine variants:

* ``ClosedFormEngine`` -- balls and polydiscs, rational kernels differentiated
  exactly through truncated Taylor arithmetic.
* ``SeriesEngine`` -- Reinhardt domains, monomial series with closed-form
  moments, truncated by total degree or per-coordinate caps with a tail bound.
* ``GramEngine`` -- any bounded domain from a polynomial basis and its Gram
  matrix (eigenvalue-floored); kernels, jets and constrained extremal
  machinery all reduce to linear algebra on the factorization.
* ``PullbackEngine`` -- kernel on an unbounded model through a registered
  biholomorphism onto a bounded representative (point evaluation only; jets
  and metric reports travel through the transformation rules instead).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space

from .basis import MonomialBasis, OrthonormalizedBasis, graded_multi_indices
from .domains import (
    Ball,
    Biholomorphism,
    DomainSpec,
    Egg,
    Polydisc,
    ReinhardtMoment,
    as_point,
)
from .errors import (
    ArgumentError,
    DomainError,
    InfeasibleError,
    TruncationError,
    UnsupportedError,
)
from .quadrature import GramResult, QuadratureScheme, gram_matrix, log_moment
from .taylor import JetContext

__all__ = [
    "KernelJet",
    "KernelEngine",
    "ClosedFormEngine",
    "SeriesEngine",
    "GramEngine",
    "PullbackEngine",
    "kernel_eval",
    "kernel_jet",
    "min_integral_I0",
    "min_integral_I1",
    "make_engine",
]

MAX_JET_ORDER = 4


def _jet_pairs(n: int, max_order: int):
    singles = graded_multi_indices(n, max_order)
    return [
        (a, b)
        for a in singles
        for b in singles
        if sum(a) + sum(b) <= max_order
    ]


@dataclass
class KernelJet:
    """Mixed Wirtinger derivatives of K on the diagonal.

    ``entries[(a, b)]`` holds d^a_z d^b_zbar K(z, z), i.e. the (a, b)
    derivative of K(z, w) in (z, conj(w)) evaluated at w = z.  Conjugate
    symmetry entries[(a, b)] = conj(entries[(b, a)]) holds by construction.
    """

    z: np.ndarray
    n: int
    max_order: int
    entries: dict[tuple, complex]
    provenance: str
    steps: dict = field(default_factory=dict)

    def entry(self, a, b) -> complex:
        return self.entries[(tuple(a), tuple(b))]

    @property
    def K(self) -> float:
        zero = (0,) * self.n
        return float(self.entries[(zero, zero)].real)

    def gradient(self) -> np.ndarray:
        zero = (0,) * self.n
        return np.array(
            [self.entries[(_unit(self.n, j), zero)] for j in range(self.n)]
        )

    def mixed_hessian(self) -> np.ndarray:
        """Matrix of d^2 K / dz_a dzbar_b."""
        return np.array(
            [
                [self.entries[(_unit(self.n, a), _unit(self.n, b))] for b in range(self.n)]
                for a in range(self.n)
            ]
        )

    def max_conjugate_defect(self) -> float:
        worst = 0.0
        for (a, b), v in self.entries.items():
            w = self.entries.get((b, a))
            if w is not None:
                worst = max(worst, abs(v - np.conj(w)) / (1.0 + abs(v)))
        return worst

    def to_csv(self, path):
        import csv

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["a", "b", "re", "im"])
            for (a, b), v in sorted(self.entries.items()):
                w.writerow([" ".join(map(str, a)), " ".join(map(str, b)), v.real, v.imag])


def _unit(n: int, j: int) -> tuple[int, ...]:
    return tuple(1 if i == j else 0 for i in range(n))


class KernelEngine:
    """Common interface: K(z, w), diagonal jets, descriptor."""

    domain: DomainSpec

    @property
    def n(self) -> int:
        return self.domain.n

    def kernel(self, z, w) -> complex:
        raise NotImplementedError

    def jet(self, z, max_order: int = 2) -> KernelJet:
        raise NotImplementedError

    def descriptor(self) -> dict:
        raise NotImplementedError

    def _check_order(self, max_order: int):
        if max_order > MAX_JET_ORDER:
            raise UnsupportedError(f"jets only available up to order {MAX_JET_ORDER}")


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------


class ClosedFormEngine(KernelEngine):
    """Exact kernels: ball K = n!/(pi^n R^2n) (1 - <z,w>/R^2)^-(n+1), polydisc products."""

    def __init__(self, domain: DomainSpec):
        if not isinstance(domain, (Ball, Polydisc)):
            raise UnsupportedError("closed-form engine supports balls and polydiscs")
        self.domain = domain

    def kernel(self, z, w) -> complex:
        z, w = as_point(z), as_point(w)
        if isinstance(self.domain, Ball):
            n, R, c = self.domain.n, self.domain.radius, self.domain.center
            s = np.dot(z - c, np.conj(w - c)) / R**2
            return complex(
                math.factorial(n) / (math.pi**n * R ** (2 * n)) * (1 - s) ** (-(n + 1))
            )
        val = 1.0 + 0j
        for zj, wj, r in zip(z, w, self.domain.radii):
            val *= 1.0 / (math.pi * r**2) * (1 - zj * np.conj(wj) / r**2) ** (-2.0)
        return complex(val)

    def jet(self, z, max_order: int = 2) -> KernelJet:
        self._check_order(max_order)
        z = as_point(z)
        self.domain.require_interior(z)
        n = self.n
        ctx = JetContext(2 * n, max_order)
        zv = [ctx.var(j, z[j]) for j in range(n)]
        wv = [ctx.var(n + j, np.conj(z[j])) for j in range(n)]
        if isinstance(self.domain, Ball):
            R, c = self.domain.radius, self.domain.center
            s = ctx.const(0.0)
            for j in range(n):
                s = s + (zv[j] - c[j]) * (wv[j] - np.conj(c[j]))
            phi = ctx.const(1.0) - s * (1.0 / R**2)
            K = phi.power(-(n + 1)) * (math.factorial(n) / (math.pi**n * R ** (2 * n)))
        else:
            K = ctx.const(1.0)
            for j, r in enumerate(self.domain.radii):
                phi = ctx.const(1.0) - zv[j] * wv[j] * (1.0 / r**2)
                K = K * phi.power(-2.0) * (1.0 / (math.pi * r**2))
        entries = {}
        for a, b in _jet_pairs(n, max_order):
            entries[(a, b)] = K.derivative(a + b)
        return KernelJet(z, n, max_order, entries, "analytic")

    def descriptor(self):
        return {"engine": "closed-form", "domain": self.domain.config_dict()}


# ---------------------------------------------------------------------------
# Reinhardt series
# ---------------------------------------------------------------------------


class SeriesEngine(KernelEngine):
    """Monomial series K(z, w) = sum z^a conj(w)^a / S_a with closed-form moments.

    Truncation is either by total degree or by per-coordinate caps (useful for
    rays into a boundary point where one coordinate needs thousands of powers
    and the others a handful).  The tail estimate extrapolates the last two
    per-axis shells geometrically; evaluations exceeding ``tail_tol``
    (relative) raise ``TruncationError``.
    """

    def __init__(
        self,
        domain: DomainSpec,
        degree: int | None = None,
        caps: tuple[int, ...] | None = None,
        tail_tol: float = 1e-8,
    ):
        if not isinstance(domain, (Ball, Polydisc, Egg, ReinhardtMoment)):
            raise UnsupportedError("series engine needs a Reinhardt domain")
        if degree is None and caps is None:
            degree = 24
        self.domain = domain
        self.degree = degree
        self.caps = tuple(caps) if caps is not None else None
        self.tail_tol = tail_tol
        idx = graded_multi_indices(domain.n, degree or 0, caps=self.caps)
        self.alphas = np.array(idx, dtype=np.int64)
        self.log_moments = np.array([log_moment(domain, tuple(a)) for a in idx])

    def _terms_diag(self, z: np.ndarray, a, b) -> np.ndarray:
        """Termwise d^a_z d^b_zbar of the series on the diagonal."""
        A = self.alphas
        av = np.array(a, dtype=np.int64)
        bv = np.array(b, dtype=np.int64)
        ok = np.all(A >= av, axis=1) & np.all(A >= bv, axis=1)
        coeff = np.ones(A.shape[0])
        for j in range(self.n):
            for r in range(a[j]):
                coeff = coeff * np.where(ok, A[:, j] - r, 0)
            for r in range(b[j]):
                coeff = coeff * np.where(ok, A[:, j] - r, 0)
        za = np.prod(
            np.where(ok[:, None], z[None, :], 1.0) ** np.where(ok[:, None], A - av, 0),
            axis=1,
        )
        zb = np.prod(
            np.where(ok[:, None], np.conj(z)[None, :], 1.0)
            ** np.where(ok[:, None], A - bv, 0),
            axis=1,
        )
        return np.where(ok, coeff * za * zb * np.exp(-self.log_moments), 0.0)

    def _tail_estimate(self, terms: np.ndarray) -> float:
        """Geometric extrapolation of the last two shells along each capped axis."""
        A = self.alphas
        est = 0.0
        for j in range(self.n):
            top = A[:, j].max()
            if top < 2:
                continue
            last = np.abs(terms[A[:, j] == top]).sum()
            prev = np.abs(terms[A[:, j] == top - 1]).sum()
            if last == 0.0:
                continue
            rho = last / prev if prev > 0 else 1.0
            if rho >= 0.999:
                return math.inf
            est += last * rho / (1 - rho)
        return est

    def kernel(self, z, w) -> complex:
        z, w = as_point(z), as_point(w)
        A = self.alphas
        za = np.prod(z[None, :] ** A, axis=1)
        wb = np.prod(np.conj(w)[None, :] ** A, axis=1)
        terms = za * wb * np.exp(-self.log_moments)
        total = terms.sum()
        tail = self._tail_estimate(terms)
        if not tail <= self.tail_tol * max(abs(total), 1e-300):
            raise TruncationError(
                f"series tail estimate {tail:.2e} exceeds tolerance at z={z}, w={w}"
            )
        return complex(total)

    def jet(self, z, max_order: int = 2) -> KernelJet:
        self._check_order(max_order)
        z = as_point(z)
        self.domain.require_interior(z)
        entries = {}
        tail_rel = 0.0
        for a, b in _jet_pairs(self.n, max_order):
            terms = self._terms_diag(z, a, b)
            val = terms.sum()
            entries[(a, b)] = complex(val)
            if a == b:
                t = self._tail_estimate(terms)
                tail_rel = max(tail_rel, t / max(abs(val), 1e-300))
        if not tail_rel <= self.tail_tol:
            raise TruncationError(
                f"series tail estimate (relative {tail_rel:.2e}) exceeds tolerance at z={z}"
            )
        return KernelJet(z, self.n, max_order, entries, "series", {"tail_rel": tail_rel})

    def descriptor(self):
        return {
            "engine": "series",
            "domain": self.domain.config_dict(),
            "degree": self.degree,
            "caps": list(self.caps) if self.caps else None,
            "tail_tol": self.tail_tol,
        }


# ---------------------------------------------------------------------------
# Gram-basis engines
# ---------------------------------------------------------------------------


class GramEngine(KernelEngine):
    """Reproducing kernel of a finite polynomial subspace in a given inner product.

    ``S[i, j] = <phi_j, phi_i>`` so that coefficient vectors satisfy
    ||f||^2 = c^H S c.  The factorization is an eigendecomposition with a
    relative floor (default 1e-12) below which directions are discarded.
    """

    def __init__(
        self,
        domain: DomainSpec,
        basis: MonomialBasis | OrthonormalizedBasis,
        S: np.ndarray | None = None,
        scheme: QuadratureScheme | None = None,
        eig_floor: float = 1e-12,
        gram_error: float = 0.0,
    ):
        self.domain = domain
        self.basis = basis
        self.scheme = scheme
        self.gram_error = gram_error
        if S is None:
            S = np.eye(len(basis), dtype=complex)
        S = np.asarray(S, dtype=complex)
        if S.shape != (len(basis), len(basis)):
            raise ArgumentError("Gram matrix does not match the basis")
        self.S = 0.5 * (S + S.conj().T)
        lam, Q = np.linalg.eigh(self.S)
        lam_max = float(lam.max()) if len(lam) else 1.0
        keep = lam > eig_floor * lam_max
        self.eigenvalues = lam[keep]
        self.Q = Q[:, keep]
        self.rank = int(keep.sum())

    @classmethod
    def from_moments(cls, domain: DomainSpec, degree: int, caps=None) -> "GramEngine":
        """Exact diagonal Gram matrix for the Reinhardt catalog."""
        idx = graded_multi_indices(domain.n, degree, caps=caps)
        S = np.diag([math.exp(log_moment(domain, a)) for a in idx]).astype(complex)
        return cls(domain, MonomialBasis(domain.n, idx), S)

    @classmethod
    def from_quadrature(
        cls,
        domain: DomainSpec,
        degree: int,
        scheme: QuadratureScheme,
        threads: int = 1,
    ) -> "GramEngine":
        idx = graded_multi_indices(domain.n, degree)
        res: GramResult = gram_matrix(domain, idx, scheme, threads=threads)
        return cls(
            domain,
            MonomialBasis(domain.n, idx),
            res.matrix,
            scheme,
            gram_error=res.error_estimate,
        )

    # -- linear algebra helpers -------------------------------------------

    def apply_Sinv(self, B: np.ndarray) -> np.ndarray:
        return self.Q @ ((self.Q.conj().T @ B).T / self.eigenvalues).T

    def kernel(self, z, w) -> complex:
        vz = self.basis.jets(as_point(z), 0)[(0,) * self.n]
        vw = self.basis.jets(as_point(w), 0)[(0,) * self.n]
        return complex(vz @ self.apply_Sinv(np.conj(vw)))

    def jet(self, z, max_order: int = 2) -> KernelJet:
        self._check_order(max_order)
        z = as_point(z)
        self.domain.require_interior(z)
        jets = self.basis.jets(z, max_order)
        sol = {a: self.apply_Sinv(np.conj(jets[a])) for a in jets}
        entries = {}
        for a, b in _jet_pairs(self.n, max_order):
            entries[(a, b)] = complex(jets[a] @ sol[b])
        return KernelJet(z, self.n, max_order, entries, "gram")

    def constraint_rows(self, z, u=None) -> np.ndarray:
        """Rows of f(z) and either all first partials or the u-directional one."""
        jets = self.basis.jets(as_point(z), 1)
        rows = [jets[(0,) * self.n]]
        if u is None:
            rows += [jets[_unit(self.n, j)] for j in range(self.n)]
        else:
            u = as_point(u)
            rows += [sum(u[j] * jets[_unit(self.n, j)] for j in range(self.n))]
        return np.array(rows)

    def second_derivative_map(self, z, u) -> np.ndarray:
        """W[alpha, i] = sum_beta u_beta d^2 phi_i / dz_alpha dz_beta (z)."""
        u = as_point(u)
        jets = self.basis.jets(as_point(z), 2)
        W = np.zeros((self.n, len(self.basis)), dtype=complex)
        for a in range(self.n):
            for b in range(self.n):
                idx = tuple(
                    (1 if j == a else 0) + (1 if j == b else 0) for j in range(self.n)
                )
                W[a] += u[b] * jets[idx]
        return W

    def constrained_null_basis(self, C: np.ndarray) -> np.ndarray:
        """S-orthonormal basis Z of {c : Cc = 0}: Z^H S Z = I."""
        Z0 = null_space(C)
        if Z0.shape[1] == 0:
            raise InfeasibleError("constraints leave no room in this basis")
        T = Z0.conj().T @ self.S @ Z0
        T = 0.5 * (T + T.conj().T)
        lam, Q = np.linalg.eigh(T)
        good = lam > 1e-13 * lam.max()
        return Z0 @ (Q[:, good] / np.sqrt(lam[good]))

    def descriptor(self):
        d = {
            "engine": "gram",
            "domain": self.domain.config_dict(),
            "rank": self.rank,
        }
        d.update(self.basis.descriptor())
        if self.scheme is not None:
            d["scheme"] = self.scheme.config_dict()
        return d


# ---------------------------------------------------------------------------
# Pullback
# ---------------------------------------------------------------------------


class PullbackEngine(KernelEngine):
    """Kernel on phi.source induced by an engine on phi.target.

    K_source(z, w) = K_target(phi z, phi w) det phi'(z) conj(det phi'(w)).
    Jets are intentionally unsupported: metric data crosses the map through
    the transformation rules in :mod:`kfuks.metrics`.
    """

    def __init__(self, target_engine: KernelEngine, phi: Biholomorphism):
        if phi.target is not target_engine.domain and (
            phi.target.config_dict() != target_engine.domain.config_dict()
        ):
            raise ArgumentError("map target does not match the engine domain")
        self.domain = phi.source
        self.target_engine = target_engine
        self.phi = phi

    def kernel(self, z, w) -> complex:
        z, w = as_point(z), as_point(w)
        Kt = self.target_engine.kernel(self.phi(z), self.phi(w))
        return complex(
            Kt * self.phi.det_jacobian(z) * np.conj(self.phi.det_jacobian(w))
        )

    def jet(self, z, max_order: int = 2) -> KernelJet:
        raise UnsupportedError(
            "pullback engines do not form jets; transform metric reports instead"
        )

    def descriptor(self):
        return {
            "engine": "pullback",
            "map": self.phi.name,
            "target": self.target_engine.descriptor(),
        }


# ---------------------------------------------------------------------------
# Spec-level operations
# ---------------------------------------------------------------------------


def kernel_eval(engine: KernelEngine, z, w) -> complex:
    """K(z, w) with interiority checks on both arguments."""
    engine.domain.require_interior(z)
    engine.domain.require_interior(w)
    return engine.kernel(z, w)


def kernel_jet(engine: KernelEngine, z, max_order: int = 2) -> KernelJet:
    jet = engine.jet(z, max_order)
    if jet.K <= 0:
        raise DomainError(f"kernel is not positive at {as_point(z)}")
    return jet


def _least_norm_value(engine: GramEngine, V: np.ndarray, b: np.ndarray):
    """min ||f||^2 subject to V c = b, plus the minimizing coefficients."""
    G = V @ engine.apply_Sinv(V.conj().T)
    G = 0.5 * (G + G.conj().T)
    lam = np.linalg.eigvalsh(G)
    if lam.min() <= 1e-13 * max(lam.max(), 1e-300):
        raise InfeasibleError("constraints are unattainable in this basis")
    mu = np.linalg.solve(G, b)
    value = float(np.real(b.conj() @ mu))
    coeffs = engine.apply_Sinv(V.conj().T @ mu)
    return value, coeffs


def min_integral_I0(engine: GramEngine, zeta):
    """Least squared norm over the basis span subject to f(zeta) = 1.

    Equals 1/K_N(zeta); both routes are computed and cross-checked.
    """
    engine.domain.require_interior(zeta)
    V = engine.constraint_rows(zeta)[:1]
    value, coeffs = _least_norm_value(engine, V, np.array([1.0 + 0j]))
    via_kernel = 1.0 / float(np.real(engine.kernel(zeta, zeta)))
    if abs(value - via_kernel) > 1e-8 * abs(via_kernel):
        raise ArgumentError(
            f"internal identity I0 = 1/K violated: {value} vs {via_kernel}"
        )
    return value, coeffs


def min_integral_I1(engine: GramEngine, zeta, u):
    """Least squared norm subject to f(zeta) = 0 and sum u_j df/dz_j (zeta) = 1."""
    u = as_point(u)
    if not np.any(u != 0):
        raise ArgumentError("direction u must be nonzero")
    engine.domain.require_interior(zeta)
    V = engine.constraint_rows(zeta, u=u)
    value, coeffs = _least_norm_value(engine, V, np.array([0.0, 1.0], dtype=complex))
    return value, coeffs


def make_engine(domain: DomainSpec, kind: str = "auto", **kw) -> KernelEngine:
    """Convenience factory used by the CLI and the verification harnesses."""
    if kind == "auto":
        kind = "closed-form" if isinstance(domain, (Ball, Polydisc)) else "series"
    if kind == "closed-form":
        return ClosedFormEngine(domain)
    if kind == "series":
        return SeriesEngine(
            domain,
            degree=kw.get("degree"),
            caps=kw.get("caps"),
            tail_tol=kw.get("tail_tol", 1e-8),
        )
    if kind == "gram":
        scheme = kw.get("scheme")
        if scheme is None:
            return GramEngine.from_moments(domain, kw.get("degree", 12), caps=kw.get("caps"))
        return GramEngine.from_quadrature(
            domain, kw.get("degree", 12), scheme, threads=kw.get("threads", 1)
        )
    raise ArgumentError(f"unknown engine kind {kind!r}")
