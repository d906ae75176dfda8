"""Domains, weighted homogeneous model polynomials, dilations, cones and biholomorphisms.

Complex points are numpy arrays of shape (n,) with dtype complex128. Bounding
boxes are real arrays of shape (2n, 2) with rows (lo, hi) ordered
(Re z_1, Im z_1, ..., Re z_n, Im z_n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (
    ArgumentError,
    DomainError,
    UnsupportedError,
    ValidationError,
)

__all__ = [
    "Weights",
    "WeightedPolynomial",
    "DomainSpec",
    "Ball",
    "Polydisc",
    "Egg",
    "ReinhardtMoment",
    "Model",
    "BumpedModel",
    "Defining",
    "Intersection",
    "Biholomorphism",
    "Cone",
    "dilate",
    "is_weighted_homogeneous",
    "levi_psd_check",
    "validate_bumping",
    "model_to_bounded",
    "boundary_distance",
    "cone_samples",
    "default_psh_grid",
]

INTERIOR_MARGIN = 1e-13


def as_point(z) -> np.ndarray:
    return np.atleast_1d(np.asarray(z, dtype=complex))


# ---------------------------------------------------------------------------
# Weights and anisotropic dilations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Weights:
    """Coordinate weights (m_1, ..., m_n): positive rationals, nondecreasing.

    Weight m_j assigns the scaling exponent 1/m_j to coordinate z_j under the
    anisotropic dilation.  For model usage m_1 = 1.
    """

    m: tuple[Fraction, ...]

    def __init__(self, m: Sequence):
        vals = tuple(Fraction(x) for x in m)
        if not vals:
            raise ArgumentError("weights must be nonempty")
        if any(v < 1 for v in vals):
            raise ArgumentError("all weights must be >= 1")
        if any(vals[i] > vals[i + 1] for i in range(len(vals) - 1)):
            raise ArgumentError("weights must be nondecreasing")
        object.__setattr__(self, "m", vals)

    @property
    def n(self) -> int:
        return len(self.m)

    def tail(self) -> "Weights":
        """Weights restricted to coordinates 2..n (for polynomials in z')."""
        if self.n < 2:
            raise ArgumentError("no tail weights for n = 1")
        return Weights(self.m[1:])

    def exponents(self) -> np.ndarray:
        """Dilation exponents 1/m_j as floats."""
        return np.array([float(Fraction(1) / mj) for mj in self.m])

    def sum_2_over_m(self) -> float:
        """The scaling exponent sum 2/m_1 + ... + 2/m_n."""
        return float(sum(Fraction(2) / mj for mj in self.m))

    def config_list(self) -> list[str]:
        return [str(mj) for mj in self.m]


def dilate(t: float, z, m: Weights) -> np.ndarray:
    """Anisotropic dilation: z_j -> t^(1/m_j) z_j componentwise.

    Satisfies dilate(1, z, m) = z and dilate(s, dilate(t, z, m), m)
    = dilate(s*t, z, m) because the rational exponents add exactly.
    """
    if t <= 0:
        raise DomainError(f"dilation parameter must be positive, got {t}")
    z = as_point(z)
    if z.shape[-1] != m.n:
        raise ArgumentError(f"point has {z.shape[-1]} coordinates, weights have {m.n}")
    return z * (float(t) ** m.exponents())


# ---------------------------------------------------------------------------
# Weighted homogeneous polynomials
# ---------------------------------------------------------------------------


def _as_multi(a, nvars: int) -> tuple[int, ...]:
    if isinstance(a, (int, np.integer)):
        a = (int(a),)
    a = tuple(int(x) for x in a)
    if len(a) != nvars or any(x < 0 for x in a):
        raise ArgumentError(f"bad multi-index {a} for {nvars} variable(s)")
    return a


@dataclass(frozen=True, eq=False)
class WeightedPolynomial:
    """Real-valued polynomial sum c_ab * z'^a * conj(z')^b in z' in C^(n-1).

    ``terms`` maps (a, b) multi-index pairs to complex coefficients; reality
    requires c_ab = conj(c_ba).  ``weights`` are the tail weights (m_2..m_n).
    Pure terms (a = 0 or b = 0) are tolerated here and rejected only when the
    polynomial is installed in a model domain.
    """

    terms: dict[tuple[tuple[int, ...], tuple[int, ...]], complex]
    weights: Weights

    def __init__(self, terms, weights: Weights):
        nv = weights.n
        table: dict = {}
        for a, b, c in terms:
            key = (_as_multi(a, nv), _as_multi(b, nv))
            table[key] = table.get(key, 0j) + complex(c)
        table = {k: v for k, v in table.items() if v != 0}
        for (a, b), c in table.items():
            cc = table.get((b, a), 0j)
            if abs(np.conj(cc) - c) > 1e-12 * (1 + abs(c)):
                raise ArgumentError(
                    f"coefficients violate reality: c[{a},{b}]={c} vs conj(c[{b},{a}])={cc}"
                )
        object.__setattr__(self, "terms", table)
        object.__setattr__(self, "weights", weights)

    @property
    def nvars(self) -> int:
        return self.weights.n

    def has_pure_terms(self) -> bool:
        zero = (0,) * self.nvars
        return any(a == zero or b == zero for a, b in self.terms)

    def weighted_degrees(self) -> list[Fraction]:
        out = []
        for a, b in self.terms:
            out.append(sum((Fraction(aj + bj) / mj for aj, bj, mj in zip(a, b, self.weights.m)), Fraction(0)))
        return out

    def __call__(self, zp) -> float:
        zp = as_point(zp)
        val = 0j
        for (a, b), c in self.terms.items():
            val += c * np.prod(zp**np.array(a)) * np.prod(np.conj(zp) ** np.array(b))
        return float(val.real)

    def complex_hessian(self, zp) -> np.ndarray:
        """Matrix of d^2 P / dz'_j dconj(z')_k at zp (Hermitian for real P)."""
        zp = as_point(zp)
        nv = self.nvars
        H = np.zeros((nv, nv), dtype=complex)
        for (a, b), c in self.terms.items():
            for j in range(nv):
                if a[j] == 0:
                    continue
                for k in range(nv):
                    if b[k] == 0:
                        continue
                    aa = np.array(a)
                    bb = np.array(b)
                    aa[j] -= 1
                    bb[k] -= 1
                    H[j, k] += (
                        c
                        * a[j]
                        * b[k]
                        * np.prod(zp**aa)
                        * np.prod(np.conj(zp) ** bb)
                    )
        return H

    def scale(self, factor: complex) -> "WeightedPolynomial":
        return WeightedPolynomial(
            [(a, b, factor * c) for (a, b), c in self.terms.items()], self.weights
        )

    def minus(self, other: "WeightedPolynomial", coeff: float = 1.0) -> "WeightedPolynomial":
        if other.weights.m != self.weights.m:
            raise ArgumentError("polynomials carry different weights")
        items = [(a, b, c) for (a, b), c in self.terms.items()]
        items += [(a, b, -coeff * c) for (a, b), c in other.terms.items()]
        return WeightedPolynomial(items, self.weights)

    def config_list(self) -> list:
        out = []
        for (a, b), c in sorted(self.terms.items()):
            aa = a[0] if self.nvars == 1 else list(a)
            bb = b[0] if self.nvars == 1 else list(b)
            out.append([aa, bb, c.real, c.imag])
        return out


def abs2m_polynomial(m: int, weights: Weights | None = None) -> WeightedPolynomial:
    """The polynomial |z2|^(2m) in one variable with its natural weight 2m."""
    w = weights if weights is not None else Weights([2 * m])
    return WeightedPolynomial([((m,), (m,), 1.0)], w)


def norm2_polynomial(nvars: int) -> WeightedPolynomial:
    """|z'|^2 = sum |z_j|^2 with weights (2, ..., 2)."""
    w = Weights([2] * nvars)
    terms = []
    for j in range(nvars):
        e = [0] * nvars
        e[j] = 1
        terms.append((tuple(e), tuple(e), 1.0))
    return WeightedPolynomial(terms, w)


def is_weighted_homogeneous(P: WeightedPolynomial, tol: float = 1e-12):
    """Check P(pi_t z') = t P(z') for the weights carried by P.

    Exact test: every term has weighted degree 1 in rational arithmetic.
    A sampled identity check over a fixed (t, z') grid guards coding errors.
    Returns (flag, max_residual).
    """
    exact = all(d == 1 for d in P.weighted_degrees())
    rng = np.random.default_rng(20240 + P.nvars)
    resid = 0.0
    tail = Weights(P.weights.m)
    for t in (0.25, 0.5, 1.0, 2.0, 4.0):
        for _ in range(5):
            zp = rng.normal(size=P.nvars) + 1j * rng.normal(size=P.nvars)
            lhs = P(dilate(t, zp, tail))
            rhs = t * P(zp)
            resid = max(resid, abs(lhs - rhs) / (1.0 + abs(rhs)))
    return (exact and resid < tol), resid


@dataclass
class PshReport:
    passed: bool
    min_eigenvalue: float
    strict: bool
    grid_size: int
    failures: list


def default_psh_grid(nvars: int, shells: int = 7, directions: int = 12, seed: int = 7):
    """Log-spaced radial shells [1e-2, 10] times angular/direction samples."""
    rng = np.random.default_rng(seed)
    radii = np.logspace(-2, 1, shells)
    pts = []
    for r in radii:
        for _ in range(directions):
            v = rng.normal(size=nvars) + 1j * rng.normal(size=nvars)
            v /= np.linalg.norm(v)
            pts.append(r * v)
    return pts


def levi_psd_check(P: WeightedPolynomial, grid, strict: bool = False) -> PshReport:
    """Evaluate the complex Hessian of P on a grid and report its minimum eigenvalue.

    PASS iff the Hessian is PSD (or PD when ``strict``) at every grid point.
    """
    grid = list(grid)
    if not grid:
        raise ArgumentError("empty grid")
    min_eig = math.inf
    failures = []
    for zp in grid:
        zp = as_point(zp)
        if strict and np.all(zp == 0):
            raise ArgumentError("strict check requires the grid to avoid the origin")
        H = P.complex_hessian(zp)
        lam = float(np.linalg.eigvalsh(0.5 * (H + H.conj().T)).min())
        min_eig = min(min_eig, lam)
        bad = lam <= 0 if strict else lam < -1e-12
        if bad:
            failures.append((zp.tolist(), lam))
    return PshReport(not failures, min_eig, strict, len(grid), failures)


@dataclass
class BumpingReport:
    passed: bool
    positivity_ok: bool
    homogeneity_ok: bool
    per_delta: dict[float, bool]
    boundary_cases: list[float]


def validate_bumping(
    P: WeightedPolynomial,
    a: WeightedPolynomial,
    delta_grid: Sequence[float],
    grid=None,
) -> BumpingReport:
    """Check bumping admissibility of ``a`` for ``P`` over a delta grid in (0, 1].

    Conditions: a > 0 off the origin, a weighted homogeneous of degree one in
    the shared weights, and P - delta*a strictly plurisubharmonic off 0 for
    each delta.  delta = 1 entries are reported as boundary cases and do not
    decide the overall verdict.
    """
    if a.weights.m != P.weights.m:
        raise ArgumentError("P and a must share weights")
    deltas = sorted(set(float(d) for d in delta_grid))
    if any(d <= 0 or d > 1 for d in deltas):
        raise ArgumentError("delta grid must lie in (0, 1]")
    grid = list(grid) if grid is not None else default_psh_grid(P.nvars)

    positivity_ok = all(a(zp) > 0 for zp in grid)
    homogeneity_ok, _ = is_weighted_homogeneous(a)

    per_delta: dict[float, bool] = {}
    boundary = []
    for d in deltas:
        rep = levi_psd_check(P.minus(a, d), grid, strict=True)
        per_delta[d] = rep.passed
        if d == 1.0 and not rep.passed:
            boundary.append(d)
    interior_ok = all(ok for d, ok in per_delta.items() if d < 1.0)
    passed = positivity_ok and homogeneity_ok and interior_ok
    return BumpingReport(passed, positivity_ok, homogeneity_ok, per_delta, boundary)


# ---------------------------------------------------------------------------
# Domain specifications
# ---------------------------------------------------------------------------


class DomainSpec:
    """Base class for domain descriptions."""

    n: int
    bounded: bool = True

    def contains(self, z) -> bool:
        z = as_point(z)
        return bool(self.contains_batch(z[None, :])[0])

    def contains_batch(self, Z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def bounding_box(self) -> np.ndarray:
        raise UnsupportedError(f"{type(self).__name__} carries no bounding box")

    def config_dict(self) -> dict:
        raise NotImplementedError

    def require_interior(self, z, what: str = "point"):
        if not self.contains(z):
            raise DomainError(f"{what} {as_point(z)} is not interior to {self}")

    def __repr__(self):
        return f"{type(self).__name__}({self.config_dict()})"


def _box_from_intervals(ivals) -> np.ndarray:
    return np.array(ivals, dtype=float)


@dataclass(eq=False, repr=False)
class Ball(DomainSpec):
    """Euclidean ball {|z - center| < radius} in C^n.  n = 1 is a disc."""

    n: int
    radius: float = 1.0
    center: np.ndarray | None = None

    def __post_init__(self):
        if self.n < 1 or self.radius <= 0:
            raise ArgumentError("ball needs n >= 1 and radius > 0")
        c = np.zeros(self.n, dtype=complex) if self.center is None else as_point(self.center)
        if c.shape != (self.n,):
            raise ArgumentError("center has wrong dimension")
        self.center = c

    def contains_batch(self, Z):
        d = Z - self.center
        return np.einsum("ij,ij->i", d, d.conj()).real < self.radius**2 - INTERIOR_MARGIN

    def bounding_box(self):
        iv = []
        for j in range(self.n):
            for part in (self.center[j].real, self.center[j].imag):
                iv.append((part - self.radius, part + self.radius))
        return _box_from_intervals(iv)

    def config_dict(self):
        d = {"kind": "ball", "n": self.n, "radius": self.radius}
        if np.any(self.center != 0):
            d["center"] = [[zj.real, zj.imag] for zj in self.center]
        return d


@dataclass(eq=False, repr=False)
class Polydisc(DomainSpec):
    """Polydisc {|z_j| < r_j} centered at the origin."""

    radii: tuple[float, ...]

    def __post_init__(self):
        self.radii = tuple(float(r) for r in self.radii)
        if not self.radii or any(r <= 0 for r in self.radii):
            raise ArgumentError("polydisc radii must be positive")
        self.n = len(self.radii)

    def contains_batch(self, Z):
        return np.all(np.abs(Z) < np.array(self.radii) - INTERIOR_MARGIN, axis=1)

    def bounding_box(self):
        iv = []
        for r in self.radii:
            iv += [(-r, r), (-r, r)]
        return _box_from_intervals(iv)

    def config_dict(self):
        return {"kind": "polydisc", "radii": list(self.radii)}


@dataclass(eq=False, repr=False)
class Egg(DomainSpec):
    """The egg {|z1|^2 + |z2|^(2m) < 1} in C^2 (exponent m >= 1)."""

    m: float = 2.0

    def __post_init__(self):
        self.m = float(self.m)
        if self.m < 1:
            raise ArgumentError("egg exponent must be >= 1")
        self.n = 2

    def contains_batch(self, Z):
        return (np.abs(Z[:, 0]) ** 2 + np.abs(Z[:, 1]) ** (2 * self.m)) < 1 - INTERIOR_MARGIN

    def bounding_box(self):
        return _box_from_intervals([(-1, 1)] * 4)

    def multitype_weights(self) -> Weights:
        """Weights (1, 2m) at the flat boundary point (1, 0)."""
        mfrac = Fraction(self.m).limit_denominator(10**6)
        return Weights([1, 2 * mfrac])

    def config_dict(self):
        return {"kind": "egg", "m": self.m}


@dataclass(eq=False, repr=False)
class ReinhardtMoment(DomainSpec):
    """Bounded Reinhardt domain described by its monomial square-norms.

    ``moment_rule`` maps a multi-index alpha to S_alpha = int |z^alpha|^2 dV.
    """

    n: int
    moment_rule: Callable[[tuple[int, ...]], float]
    box: np.ndarray | None = None
    indicator: Callable[[np.ndarray], np.ndarray] | None = None

    def contains_batch(self, Z):
        if self.indicator is None:
            raise UnsupportedError("this Reinhardt domain has no indicator")
        return self.indicator(Z)

    def bounding_box(self):
        if self.box is None:
            return super().bounding_box()
        return np.asarray(self.box, dtype=float)

    def config_dict(self):
        return {"kind": "reinhardt-moment", "n": self.n, "rule": repr(self.moment_rule)}


@dataclass(eq=False, repr=False)
class Model(DomainSpec):
    """Unbounded model {lead * Re z1 + P(z') < 0}.

    ``P = None`` gives the n = 1 half-plane (no z' coordinates).  Access
    kernels on a model through a registered biholomorphism onto a bounded
    representative (see :func:`model_to_bounded`).
    """

    P: WeightedPolynomial | None
    lead: float = 1.0

    bounded = False

    def __post_init__(self):
        if self.lead not in (1.0, 2.0, 1, 2):
            raise ArgumentError("model lead coefficient must be 1 or 2")
        self.lead = float(self.lead)
        if self.P is None:
            self.n = 1
            return
        if self.P.has_pure_terms():
            raise ArgumentError("model polynomial must contain no pure terms")
        ok, resid = is_weighted_homogeneous(self.P)
        if not ok:
            raise ArgumentError(
                f"model polynomial is not weighted homogeneous (residual {resid:.2e})"
            )
        self.n = self.P.nvars + 1

    def weights(self) -> Weights:
        if self.P is None:
            return Weights([1])
        return Weights((Fraction(1),) + self.P.weights.m)

    def contains_batch(self, Z):
        if self.P is None:
            return Z[:, 0].real < -INTERIOR_MARGIN
        vals = np.array([self.lead * z[0].real + self.P(z[1:]) for z in Z])
        return vals < -INTERIOR_MARGIN

    def config_dict(self):
        return {
            "kind": "model",
            "lead": self.lead,
            "P": [] if self.P is None else self.P.config_list(),
            "weights": self.weights().config_list(),
        }


@dataclass(eq=False, repr=False)
class BumpedModel(DomainSpec):
    """Bumped model {lead * Re z1 + P(z') - delta * a(z') < 0}."""

    P: WeightedPolynomial
    a: WeightedPolynomial
    delta: float
    lead: float = 1.0

    bounded = False

    def __post_init__(self):
        if not 0 < self.delta <= 1:
            raise ArgumentError("bumping delta must lie in (0, 1]")
        if self.a.weights.m != self.P.weights.m:
            raise ArgumentError("P and a must share weights")
        self.lead = float(self.lead)
        self.n = self.P.nvars + 1

    def base_model(self) -> Model:
        return Model(self.P, self.lead)

    def contains_batch(self, Z):
        vals = np.array(
            [self.lead * z[0].real + self.P(z[1:]) - self.delta * self.a(z[1:]) for z in Z]
        )
        return vals < -INTERIOR_MARGIN

    def config_dict(self):
        return {
            "kind": "bumped-model",
            "lead": self.lead,
            "P": self.P.config_list(),
            "a": self.a.config_list(),
            "delta": self.delta,
            "weights": self.P.weights.config_list(),
        }


@dataclass(eq=False, repr=False)
class Defining(DomainSpec):
    """Bounded domain {r < 0} given by a callable defining function and a box.

    ``r`` must accept an (N, n) complex array and return an (N,) real array.
    """

    r: Callable[[np.ndarray], np.ndarray]
    box: np.ndarray
    n: int
    label: str = "defining"

    def __post_init__(self):
        self.box = np.asarray(self.box, dtype=float)
        if self.box.shape != (2 * self.n, 2):
            raise ArgumentError("bounding box must have shape (2n, 2)")

    def contains_batch(self, Z):
        return np.asarray(self.r(Z)) < -INTERIOR_MARGIN

    def bounding_box(self):
        return self.box

    def config_dict(self):
        return {"kind": "defining", "n": self.n, "label": self.label}


@dataclass(eq=False, repr=False)
class Intersection(DomainSpec):
    """Intersection of a base domain with a neighborhood ball."""

    base: DomainSpec
    center: np.ndarray
    radius: float

    def __post_init__(self):
        self.center = as_point(self.center)
        self.radius = float(self.radius)
        if self.radius <= 0:
            raise ArgumentError("neighborhood radius must be positive")
        self.n = self.base.n

    def _ball(self) -> Ball:
        return Ball(self.n, self.radius, self.center)

    def contains_batch(self, Z):
        return self.base.contains_batch(Z) & self._ball().contains_batch(Z)

    def bounding_box(self):
        b1 = self.base.bounding_box()
        b2 = self._ball().bounding_box()
        lo = np.maximum(b1[:, 0], b2[:, 0])
        hi = np.minimum(b1[:, 1], b2[:, 1])
        if np.any(lo >= hi):
            raise ArgumentError("intersection bounding box is empty")
        return np.stack([lo, hi], axis=1)

    def config_dict(self):
        return {
            "kind": "intersection",
            "domain": self.base.config_dict(),
            "center": [[zj.real, zj.imag] for zj in self.center],
            "radius": self.radius,
        }


# ---------------------------------------------------------------------------
# Biholomorphisms
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class Biholomorphism:
    """Holomorphic change of variables with its inverse and complex Jacobian."""

    forward: Callable[[np.ndarray], np.ndarray]
    inverse: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    source: DomainSpec
    target: DomainSpec
    name: str = "map"

    def __call__(self, z):
        return self.forward(as_point(z))

    def det_jacobian(self, z) -> complex:
        return complex(np.linalg.det(self.jacobian(as_point(z))))

    def compose(self, inner: "Biholomorphism") -> "Biholomorphism":
        """self o inner : inner.source -> self.target."""
        outer = self

        def fwd(z):
            return outer.forward(inner.forward(z))

        def inv(w):
            return inner.inverse(outer.inverse(w))

        def jac(z):
            return outer.jacobian(inner.forward(z)) @ inner.jacobian(z)

        return Biholomorphism(
            fwd, inv, jac, inner.source, outer.target, f"{outer.name}*{inner.name}"
        )

    def validate(self, samples, tol: float = 1e-10):
        """Round-trip, nonsingularity and target-membership checks on samples."""
        for z in samples:
            z = as_point(z)
            w = self.forward(z)
            back = self.inverse(w)
            if np.linalg.norm(back - z) > tol * (1 + np.linalg.norm(z)):
                raise ValidationError(f"{self.name}: round trip failed at {z}")
            if abs(self.det_jacobian(z)) < 1e-300:
                raise ValidationError(f"{self.name}: singular Jacobian at {z}")
            if not self.target.contains(w):
                raise ValidationError(f"{self.name}: image {w} escapes the target domain")
        return True

    @staticmethod
    def identity(domain: DomainSpec) -> "Biholomorphism":
        eye = np.eye(domain.n, dtype=complex)
        return Biholomorphism(
            lambda z: as_point(z).copy(),
            lambda w: as_point(w).copy(),
            lambda z: eye.copy(),
            domain,
            domain,
            "id",
        )

    @staticmethod
    def affine(A: np.ndarray, b: np.ndarray, source: DomainSpec, target: DomainSpec,
               name: str = "affine") -> "Biholomorphism":
        A = np.asarray(A, dtype=complex)
        b = as_point(b)
        Ainv = np.linalg.inv(A)
        return Biholomorphism(
            lambda z: A @ as_point(z) + b,
            lambda w: Ainv @ (as_point(w) - b),
            lambda z: A.copy(),
            source,
            target,
            name,
        )


def _log_cut_positive_axis(zeta: complex) -> complex:
    """log with branch cut along [0, +inf): argument taken in (0, 2*pi)."""
    a = np.angle(zeta)
    if a <= 0:
        a += 2 * np.pi
    return complex(np.log(abs(zeta)), a)


def _power_cut(zeta: complex, q: float) -> complex:
    if q == 1.0:
        return complex(zeta)
    if zeta.real >= 0 and abs(zeta.imag) < 1e-300:
        raise ValidationError(f"point {zeta} sits on the branch cut [0, inf)")
    return complex(np.exp(q * _log_cut_positive_axis(complex(zeta))))


def _model_sample_points(model: Model, count: int, seed: int = 11) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < count:
        zp = 0.8 * (rng.normal(size=model.n - 1) + 1j * rng.normal(size=model.n - 1))
        margin = np.exp(rng.normal())
        x = -(model.P(zp) / model.lead + margin)
        z1 = x + 1j * rng.normal() * 2.0
        pts.append(np.concatenate([[z1], zp]))
    return pts


def model_to_bounded(model: Model, validate: bool = True) -> Biholomorphism:
    """Cayley-type map from a diagonal model onto its bounded representative.

    Supported models: P = |z'|^2 (half-space model, any n, target the unit
    ball) and P = |z2|^(2m) in C^2 (target the egg E_m; m = 1 collapses to the
    ball).  The map is

        w_1 = (z_1 + 1)/(z_1 - 1),   w_j = lambda_j z_j / (z_1 - 1)^(2/m_j)

    with lambda_j = (4/lead)^(1/m_j) and the m-th roots taken with the branch
    cut along [0, inf), which the model never meets since Re z_1 < 0.
    """
    P = model.P
    nv = P.nvars
    norm2 = norm2_polynomial(nv)
    weights = None
    target: DomainSpec
    if P.terms == norm2.terms and P.weights.m == norm2.weights.m:
        weights = model.weights()
        target = Ball(model.n)
    elif nv == 1:
        items = list(P.terms.items())
        if len(items) != 1:
            raise UnsupportedError("only |z'|^2 and |z2|^(2m) models are supported")
        (a, b), c = items[0]
        if a != b or abs(c - 1.0) > 1e-14:
            raise UnsupportedError("only |z'|^2 and |z2|^(2m) models are supported")
        m_egg = a[0]
        if P.weights.m != (Fraction(2 * m_egg),):
            raise UnsupportedError("egg model weights must equal (1, 2m)")
        weights = model.weights()
        target = Ball(2) if m_egg == 1 else Egg(float(m_egg))
    else:
        raise UnsupportedError("only |z'|^2 and |z2|^(2m) models are supported")

    exps = [float(Fraction(2) / mj) for mj in weights.m[1:]]
    lams = [(4.0 / model.lead) ** (float(Fraction(1) / mj)) for mj in weights.m[1:]]

    def fwd(z):
        z = as_point(z)
        w = np.empty_like(z)
        w[0] = (z[0] + 1) / (z[0] - 1)
        for j in range(1, model.n):
            w[j] = lams[j - 1] * z[j] * _power_cut(z[0] - 1, -exps[j - 1])
        return w

    def inv(w):
        w = as_point(w)
        z = np.empty_like(w)
        z[0] = (w[0] + 1) / (w[0] - 1)
        for j in range(1, model.n):
            z[j] = w[j] * _power_cut(z[0] - 1, exps[j - 1]) / lams[j - 1]
        return z

    def jac(z):
        z = as_point(z)
        Jm = np.zeros((model.n, model.n), dtype=complex)
        Jm[0, 0] = -2.0 / (z[0] - 1) ** 2
        for j in range(1, model.n):
            Jm[j, j] = lams[j - 1] * _power_cut(z[0] - 1, -exps[j - 1])
            Jm[j, 0] = (
                -exps[j - 1] * lams[j - 1] * z[j] * _power_cut(z[0] - 1, -exps[j - 1] - 1)
            )
        return Jm

    phi = Biholomorphism(fwd, inv, jac, model, target, "cayley")
    if validate:
        phi.validate(_model_sample_points(model, 1000))
    return phi


def bounded_representative(domain: DomainSpec) -> tuple[DomainSpec, Biholomorphism]:
    """Return (bounded domain, map onto it); identity for bounded domains."""
    if domain.bounded:
        return domain, Biholomorphism.identity(domain)
    if isinstance(domain, Model):
        phi = model_to_bounded(domain)
        return phi.target, phi
    if isinstance(domain, BumpedModel):
        from_base = _bumped_to_base(domain)
        phi0 = model_to_bounded(from_base.target)
        phi = phi0.compose(from_base)
        return phi.target, phi
    raise UnsupportedError(f"no bounded representative for {type(domain).__name__}")


def _bumped_to_base(bumped: BumpedModel) -> Biholomorphism:
    """Coordinate scaling D_delta -> D_0 for the diagonal egg family.

    For P = a = |z2|^(2m) the bumped model is {lead Re z1 + (1-delta)|z2|^(2m) < 0},
    and (z1, z2) -> (z1, (1-delta)^(1/(2m)) z2) carries it onto the base model.
    """
    if bumped.P.terms != bumped.a.terms:
        raise UnsupportedError("bounded access implemented for a = P (diagonal family) only")
    items = list(bumped.P.terms.items())
    if len(items) != 1 or bumped.P.nvars != 1:
        raise UnsupportedError("bounded access implemented for |z2|^(2m) families only")
    (a_idx, _), _ = items[0]
    m_egg = a_idx[0]
    s = (1.0 - bumped.delta) ** (1.0 / (2 * m_egg))
    A = np.diag([1.0, s]).astype(complex)
    base = bumped.base_model()
    return Biholomorphism.affine(A, np.zeros(2), bumped, base, "bump-scale")


# ---------------------------------------------------------------------------
# Boundary distance
# ---------------------------------------------------------------------------


def boundary_distance(domain: DomainSpec, z) -> float:
    """Euclidean distance from an interior point to the boundary."""
    z = as_point(z)
    domain.require_interior(z)
    if isinstance(domain, Ball):
        return float(domain.radius - np.linalg.norm(z - domain.center))
    if isinstance(domain, Polydisc):
        return float(min(r - abs(zj) for r, zj in zip(domain.radii, z)))
    if isinstance(domain, Egg):
        return _egg_distance(domain, z)
    if isinstance(domain, Intersection):
        return float(
            min(boundary_distance(domain.base, z), boundary_distance(domain._ball(), z))
        )
    if isinstance(domain, Defining):
        return _defining_distance(domain, z)
    raise UnsupportedError(f"boundary distance unsupported for {type(domain).__name__}")


def _egg_distance(egg: Egg, z: np.ndarray) -> float:
    r1, r2 = abs(z[0]), abs(z[1])
    m = egg.m

    def dist2(s):
        rho2 = s
        rho1 = math.sqrt(max(1.0 - s ** (2 * m), 0.0))
        return (rho1 - r1) ** 2 + (rho2 - r2) ** 2

    res = minimize_scalar(dist2, bounds=(0.0, 1.0), method="bounded",
                          options={"xatol": 1e-13})
    return float(math.sqrt(max(res.fun, 0.0)))


def _defining_distance(domain: Defining, z: np.ndarray, samples: int = 4096) -> float:
    # coarse boundary sampling followed by a projected local refinement
    rng = np.random.default_rng(5)
    box = domain.bounding_box()
    lo, hi = box[:, 0], box[:, 1]
    best = math.inf
    zr = np.concatenate([z.real[:, None], z.imag[:, None]], axis=1).ravel()
    X = rng.uniform(lo, hi, size=(samples, len(lo)))
    Z = X[:, 0::2] + 1j * X[:, 1::2]
    vals = np.asarray(domain.r(Z))
    inside = vals < 0
    # bisect along segments from z to outside samples to land on r = 0
    for x, isin in zip(X, inside):
        if isin:
            continue
        a, b = zr.copy(), x.copy()
        for _ in range(60):
            mid = 0.5 * (a + b)
            zm = mid[0::2] + 1j * mid[1::2]
            if float(domain.r(zm[None, :])[0]) < 0:
                a = mid
            else:
                b = mid
        best = min(best, float(np.linalg.norm(0.5 * (a + b) - zr)))
    if not math.isfinite(best):
        raise ValidationError("no exterior samples found; enlarge the bounding box")
    return best


# ---------------------------------------------------------------------------
# Cones and ray sampling
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class Cone:
    """Non-tangential approach cone with vertex on the boundary.

    Membership: the real angle between z - vertex and the inner normal is at
    most the half-aperture, and z is interior to the domain.
    """

    vertex: np.ndarray
    normal: np.ndarray
    aperture: float = math.pi / 6

    def __post_init__(self):
        self.vertex = as_point(self.vertex)
        nu = as_point(self.normal)
        norm = np.linalg.norm(nu)
        if norm == 0:
            raise ArgumentError("inner normal must be nonzero")
        self.normal = nu / norm
        if not 0 <= self.aperture < math.pi / 2:
            raise ArgumentError("aperture must lie in [0, pi/2)")

    def angle_to_axis(self, z) -> float:
        v = as_point(z) - self.vertex
        nv = np.linalg.norm(v)
        if nv == 0:
            return 0.0
        c = float(np.real(np.vdot(self.normal, v)) / nv)
        return math.acos(min(1.0, max(-1.0, c)))

    def contains(self, z, domain: DomainSpec | None = None) -> bool:
        inside = True if domain is None else domain.contains(z)
        return inside and self.angle_to_axis(z) <= self.aperture + 1e-12


def cone_samples(cone: Cone, domain: DomainSpec, t_k: Sequence[float]) -> list[np.ndarray]:
    """Axis-ray samples z_k = vertex + t_k * normal, validated against the cone.

    If a sample escapes the domain the whole schedule is halved once before
    giving up.
    """
    t = np.asarray(list(t_k), dtype=float)
    if t.size == 0 or np.any(t <= 0) or np.any(np.diff(t) >= 0):
        raise ArgumentError("t_k must be positive and strictly decreasing")

    def build(ts):
        pts = [cone.vertex + tk * cone.normal for tk in ts]
        ok = all(domain.contains(p) and cone.contains(p, domain) for p in pts)
        return pts, ok

    pts, ok = build(t)
    if not ok:
        pts, ok = build(t / 2)
        if not ok:
            raise DomainError("ray samples leave the domain even after shrinking once")
    return pts
