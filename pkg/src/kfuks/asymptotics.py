"""Boundary-limit harnesses: scaled traces along rays, model references,
extrapolation, stability sweeps, inside convergence and localization ratios.

The scaled quantities follow the anisotropic dilation bookkeeping: with
weights (m_1, ..., m_n) at a boundary point p and d = d(z) the boundary
distance, the harness traces

    |pi_{1/d}(u)|^-1 * Btilde(z, u)      ->  Btilde_model(b*, u*),
    d^(sum 2/m_j)   * det Gtilde(z)      ->  det Gtilde_model(b*),
    d^(sum 2/m_j)   * K(z)  and  J(z)    ->  model values at b*,

where b* = (-1, 0') and u* keeps the coordinates of smallest weight among
those where u is nonzero.  Reference values at b* come from the bounded
representative through the transformation rules, never from the ray itself.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .basis import OrthonormalizedBasis
from .bergman import (
    ClosedFormEngine,
    GramEngine,
    KernelEngine,
    PullbackEngine,
    SeriesEngine,
)
from .domains import (
    Ball,
    Biholomorphism,
    BumpedModel,
    Cone,
    DomainSpec,
    Egg,
    Intersection,
    Model,
    Weights,
    abs2m_polynomial,
    as_point,
    boundary_distance,
    bounded_representative,
    cone_samples,
)
from .errors import ArgumentError, DegenerateMetricError, UnsupportedError
from .metrics import (
    MetricReport,
    kf_via_extremal,
    kobayashi_fuks,
    maximal_I,
    pullback_report,
)
from .quadrature import QuadratureScheme

__all__ = [
    "RaySequence",
    "ModelReference",
    "limiting_direction",
    "richardson_extrapolate",
    "inner_normal",
    "ray_reports",
    "scaled_kf_length",
    "scaled_kf_det",
    "scaled_kernel_and_J",
    "model_reference",
    "stability_sweep",
    "inside_convergence",
    "localization_ratio",
    "StabilityTable",
    "ConvergenceTable",
    "RatioTrace",
]


# ---------------------------------------------------------------------------
# Extrapolation
# ---------------------------------------------------------------------------


def _one_elimination(values: np.ndarray, rho: float, theta: float) -> np.ndarray:
    r = rho**theta
    return values[1:] - r * np.diff(values) / (r - 1.0)


def _estimate_theta(values: np.ndarray, rho: float) -> float | None:
    diffs = np.diff(values)
    thetas = []
    for k in range(len(diffs) - 1):
        if diffs[k] == 0 or diffs[k + 1] == 0:
            continue
        q = diffs[k + 1] / diffs[k]
        if q <= 0 or q >= 1:
            continue
        thetas.append(math.log(q) / math.log(rho))
    if not thetas:
        return None
    return float(np.clip(np.median(thetas), 0.25, 4.0))


def richardson_extrapolate(values, distances):
    """Limit of v_k = L + c d_k^theta for a geometric distance schedule.

    theta is estimated from difference ratios of consecutive triples and two
    elimination sweeps are applied; the error estimate is the spread of the
    last two extrapolants.  A non-monotone tail beyond the noise floor only
    warns and returns the last value with a wide error bar.  Returns
    (limit, error, running extrapolants).
    """
    v = np.asarray(values, dtype=float)
    d = np.asarray(distances, dtype=float)
    if v.shape != d.shape or v.size < 4:
        raise ArgumentError("need at least 4 samples with matching distances")
    if np.any(d <= 0) or np.any(np.diff(d) >= 0):
        raise ArgumentError("distances must be positive and strictly decreasing")
    scale = max(np.abs(v).max(), 1e-300)
    noise = 1e-12 * scale
    if np.abs(v - v[-1]).max() <= noise:
        return float(v[-1]), 0.0, list(v)
    rho = float(np.exp(np.median(np.diff(np.log(d)))))

    diffs = np.diff(v)
    tail_signs = np.sign(diffs[-3:])
    if np.abs(diffs[-1]) > 10 * noise and len(set(tail_signs)) > 1:
        warnings.warn("non-monotone tail; returning last value with a wide error bar")
        err = float(np.abs(v[-3:] - v[-1]).max())
        return float(v[-1]), err, list(v)

    theta = _estimate_theta(v, rho)
    if theta is None:
        return float(v[-1]), float(abs(v[-1] - v[-2])), list(v)
    w1 = _one_elimination(v, rho, theta)
    theta2 = _estimate_theta(w1, rho)
    w2 = _one_elimination(w1, rho, theta2) if theta2 is not None and len(w1) >= 3 else w1
    running = list(w2)
    limit = float(w2[-1])
    error = float(abs(w2[-1] - w2[-2])) if len(w2) >= 2 else float(abs(w1[-1] - w1[-2]))
    return limit, error, running


# ---------------------------------------------------------------------------
# Ray machinery
# ---------------------------------------------------------------------------


@dataclass
class RaySequence:
    """Samples along a non-tangential ray with scaled values and their limit."""

    label: str
    cone: Cone
    points: list[np.ndarray]
    distances: np.ndarray
    values: np.ndarray
    limit: float
    error: float
    extrapolants: list[float]
    reference: float | None = None

    def relative_gap(self) -> float | None:
        if self.reference is None:
            return None
        return abs(self.limit - self.reference) / abs(self.reference)

    def to_csv(self, path):
        import csv

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "d", "value", "running_extrapolant"])
            pad = [None] * (len(self.values) - len(self.extrapolants))
            running = pad + list(self.extrapolants)
            for k, (dk, vk, ek) in enumerate(zip(self.distances, self.values, running)):
                w.writerow([k, repr(dk), repr(vk), "" if ek is None else repr(ek)])

    def summary_dict(self) -> dict:
        out = {
            "label": self.label,
            "limit": self.limit,
            "error": self.error,
            "samples": len(self.values),
        }
        if self.reference is not None:
            out["reference"] = self.reference
            out["relative_gap"] = self.relative_gap()
        return out


def inner_normal(domain: DomainSpec, p) -> np.ndarray:
    p = as_point(p)
    if isinstance(domain, Ball):
        v = domain.center - p
        return v / np.linalg.norm(v)
    if isinstance(domain, Egg):
        if abs(abs(p[0]) - 1) < 1e-12 and abs(p[1]) < 1e-12:
            v = np.array([-p[0], 0.0], dtype=complex)
            return v / np.linalg.norm(v)
        raise UnsupportedError("egg normals are provided at (e^(i t), 0) only")
    raise UnsupportedError(f"no inner normal rule for {type(domain).__name__}")


def limiting_direction(u, m: Weights) -> np.ndarray:
    """Unit limit of pi_{1/d}(u)/|pi_{1/d}(u)| as d -> 0.

    Coordinates with the smallest weight among the nonzero entries of u
    dominate; their phases survive, everything else vanishes.
    """
    u = as_point(u)
    if not np.any(u != 0):
        raise ArgumentError("u must be nonzero")
    if u.shape[0] != m.n:
        raise ArgumentError("u and weights have different lengths")
    active = [j for j in range(m.n) if u[j] != 0]
    m_min = min(m.m[j] for j in active)
    out = np.array(
        [u[j] if (u[j] != 0 and m.m[j] == m_min) else 0.0 for j in range(m.n)],
        dtype=complex,
    )
    return out / np.linalg.norm(out)


def dilated_norm(u, m: Weights, d: float) -> float:
    """|pi_{1/d}(u)| = sqrt(sum d^(-2/m_j) |u_j|^2)."""
    u = as_point(u)
    exps = m.exponents()
    return float(np.sqrt(np.sum(d ** (-2 * exps) * np.abs(u) ** 2)))


def ray_reports(
    engine: KernelEngine,
    cone: Cone,
    t_k,
    drop_non_pd: bool = True,
):
    """Metric reports along the axis ray; non-PD samples are dropped with a warning."""
    pts = cone_samples(cone, engine.domain, t_k)
    out = []
    for z in pts:
        d = boundary_distance(engine.domain, z)
        try:
            rep = kobayashi_fuks(engine, z)
        except DegenerateMetricError as exc:
            if not drop_non_pd:
                raise
            warnings.warn(f"dropping sample at d={d:.3e}: {exc}")
            continue
        out.append((z, d, rep))
    if len(out) < 4:
        raise ArgumentError("fewer than 4 valid ray samples")
    return out


def _finish(label, cone, data, values, reference):
    d = np.array([t[1] for t in data])
    limit, err, running = richardson_extrapolate(values, d)
    return RaySequence(
        label, cone, [t[0] for t in data], d, np.asarray(values, dtype=float),
        limit, err, running, reference,
    )


def scaled_kf_length(
    engine: KernelEngine,
    p,
    u,
    weights: Weights,
    cone: Cone | None = None,
    t_k=None,
    reference: float | None = None,
    reports=None,
) -> RaySequence:
    """Trace of |pi_{1/d}(u)|^-1 * Btilde(z_k, u) along the ray toward p."""
    p, u = as_point(p), as_point(u)
    cone = cone or Cone(p, inner_normal(engine.domain, p))
    t_k = t_k if t_k is not None else [2.0**-k for k in range(3, 11)]
    data = reports if reports is not None else ray_reports(engine, cone, t_k)
    values = [rep.kf_length(u) / dilated_norm(u, weights, d) for _, d, rep in data]
    return _finish("scaled-kf-length", cone, data, values, reference)


def scaled_kf_det(
    engine: KernelEngine,
    p,
    weights: Weights,
    cone: Cone | None = None,
    t_k=None,
    reference: float | None = None,
    reports=None,
) -> RaySequence:
    """Trace of d^(sum 2/m_j) * det Gtilde(z_k)."""
    p = as_point(p)
    cone = cone or Cone(p, inner_normal(engine.domain, p))
    t_k = t_k if t_k is not None else [2.0**-k for k in range(3, 11)]
    data = reports if reports is not None else ray_reports(engine, cone, t_k)
    expo = weights.sum_2_over_m()
    values = [d**expo * rep.gtilde_det for _, d, rep in data]
    return _finish("scaled-kf-det", cone, data, values, reference)


def scaled_kernel_and_J(
    engine: KernelEngine,
    p,
    weights: Weights,
    cone: Cone | None = None,
    t_k=None,
    references: tuple[float | None, float | None] = (None, None),
    reports=None,
) -> tuple[RaySequence, RaySequence]:
    """Traces of d^(sum 2/m_j) * K(z_k) and of J(z_k)."""
    p = as_point(p)
    cone = cone or Cone(p, inner_normal(engine.domain, p))
    t_k = t_k if t_k is not None else [2.0**-k for k in range(3, 11)]
    data = reports if reports is not None else ray_reports(engine, cone, t_k)
    expo = weights.sum_2_over_m()
    kvals = [d**expo * rep.K for _, d, rep in data]
    jvals = [rep.J for _, d, rep in data]
    seq_k = _finish("scaled-kernel", cone, data, kvals, references[0])
    seq_j = _finish("canonical-invariant", cone, data, jvals, references[1])
    return seq_k, seq_j


# ---------------------------------------------------------------------------
# Model references
# ---------------------------------------------------------------------------


@dataclass
class ModelReference:
    """Invariants of a model domain at b* = (-1, 0'), via its bounded form."""

    model: Model
    b_star: np.ndarray
    u_star: np.ndarray
    report: MetricReport
    phi: Biholomorphism

    @property
    def kf_length_at_ustar(self) -> float:
        return self.report.kf_length(self.u_star)

    @property
    def gtilde_det(self) -> float:
        return self.report.gtilde_det

    @property
    def K(self) -> float:
        return self.report.K

    @property
    def J(self) -> float:
        return self.report.J


def _engine_for_bounded(domain: DomainSpec, degree: int = 14) -> KernelEngine:
    if isinstance(domain, (Ball,)):
        return ClosedFormEngine(domain)
    if isinstance(domain, Egg):
        return SeriesEngine(domain, degree=degree)
    raise UnsupportedError(f"no reference engine for {type(domain).__name__}")


def model_reference(model: Model, u_star=None, degree: int = 14) -> ModelReference:
    """Reference invariants at b* computed through the bounded representative.

    The report is formed at the image of b* (the center of the ball/egg) with
    the closed-form or series engine there, then pulled back through the
    Cayley-type map.  All positivity checks run on the pulled-back report.
    """
    bounded, phi = bounded_representative(model)
    engine = _engine_for_bounded(bounded, degree=degree)
    b_star = np.zeros(model.n, dtype=complex)
    b_star[0] = -1.0
    w = phi(b_star)
    rep_target = kobayashi_fuks(engine, w)
    rep_model = pullback_report(rep_target, phi, b_star)
    if u_star is None:
        u_star = np.zeros(model.n, dtype=complex)
        u_star[0] = 1.0
    u_star = as_point(u_star)
    if abs(np.linalg.norm(u_star) - 1.0) > 1e-12:
        raise ArgumentError("u* must be a unit vector")
    for val in (rep_model.K, rep_model.J, rep_model.gtilde_det):
        if not val > 0:
            raise DegenerateMetricError("model reference values must be positive")
    return ModelReference(model, b_star, u_star, rep_model, phi)


# ---------------------------------------------------------------------------
# Stability of the bumped family
# ---------------------------------------------------------------------------


@dataclass
class StabilityTable:
    deltas: list[float]
    J: list[float]
    M: list[float]
    gtilde_det: list[float]
    J0: float
    M0: float
    gtilde0: float
    kernel_law_residual: float
    rate: float | None


def stability_sweep(
    m_egg: int,
    deltas,
    z,
    u,
    lead: float = 1.0,
    degree: int = 14,
) -> StabilityTable:
    """J, M, det Gtilde on the bumped egg family D_delta, swept toward delta = 0.

    The family is {lead Re z1 + (1 - delta) |z2|^(2m) < 0}; every member is a
    coordinate scaling of the base model, which pins the exact kernel law

        K_Ddelta(z) = (1-delta)^(1/m) K_D0(z1, (1-delta)^(1/2m) z2),

    checked here against the pullback engines.  Deltas are restricted to
    (0, 1/2], the range on which positivity of the swept quantities is known.
    """
    deltas = sorted(float(d) for d in deltas)
    if any(d <= 0 or d > 0.5 for d in deltas):
        raise ArgumentError("deltas must lie in (0, 1/2]")
    z, u = as_point(z), as_point(u)
    P = abs2m_polynomial(m_egg)
    base = Model(P, lead)
    base.require_interior(z)
    bounded, phi0 = bounded_representative(base)
    gram = GramEngine.from_moments(bounded, degree=degree)
    eng0 = _engine_for_bounded(bounded, degree=degree)

    def invariants(phi: Biholomorphism):
        wz = phi(z)
        rep_t = kobayashi_fuks(eng0, wz)
        rep = pullback_report(rep_t, phi, z)
        Iu = maximal_I(gram, wz, phi.jacobian(z) @ u).value
        det2 = abs(phi.det_jacobian(z)) ** 2
        K_t = rep_t.K
        M_t = K_t**base.n * rep_t.J * Iu
        M = M_t * det2 ** (base.n + 1)
        return rep.J, M, rep.gtilde_det, rep.K

    J0, M0, g0, K0 = invariants(phi0)

    Js, Ms, gs = [], [], []
    law_resid = 0.0
    kernel0 = PullbackEngine(eng0, phi0)
    for d in deltas:
        bumped = BumpedModel(P, P, d, lead)
        _, phi_d = bounded_representative(bumped)
        Jd, Md, gd, Kd = invariants(phi_d)
        Js.append(Jd)
        Ms.append(Md)
        gs.append(gd)
        s = (1.0 - d) ** (1.0 / (2 * m_egg))
        z_law = np.array([z[0], s * z[1]], dtype=complex)
        law = (1.0 - d) ** (1.0 / m_egg) * float(
            np.real(kernel0.kernel(z_law, z_law))
        )
        law_resid = max(law_resid, abs(Kd - law) / abs(law))

    rate = None
    if len(deltas) >= 3:
        errs = [abs(j - J0) + abs(g - g0) / max(g0, 1e-300) for j, g in zip(Js, gs)]
        pairs = [
            (math.log(errs[i + 1] / errs[i]) / math.log(deltas[i + 1] / deltas[i]))
            for i in range(len(deltas) - 1)
            if errs[i] > 0 and errs[i + 1] > 0
        ]
        rate = float(np.median(pairs)) if pairs else None
    return StabilityTable(deltas, Js, Ms, gs, J0, M0, g0, law_resid, rate)


# ---------------------------------------------------------------------------
# Inside convergence (Ramadanov-style)
# ---------------------------------------------------------------------------


@dataclass
class ConvergenceTable:
    labels: list[str]
    K: list[float]
    J: list[float]
    gtilde_det: list[float]
    K_target: float
    monotone: bool


def inside_convergence(domains, target: DomainSpec, z) -> ConvergenceTable:
    """Kernel and invariant traces for an increasing exhaustion of ``target``.

    The kernel trace must be nonincreasing (sup characterization over a
    growing function space).  Non-nested inputs are rejected by sampling.
    """
    z = as_point(z)
    doms = list(domains)
    rng = np.random.default_rng(3)
    for a, b in zip(doms, doms[1:] + [target]):
        box = a.bounding_box()
        X = rng.uniform(box[:, 0], box[:, 1], size=(512, box.shape[0]))
        Z = X[:, 0::2] + 1j * X[:, 1::2]
        inside_a = a.contains_batch(Z)
        if not np.all(b.contains_batch(Z[inside_a])):
            raise ArgumentError("domains are not nested inside the target")
    Ks, Js, gs, labels = [], [], [], []
    for dom in doms:
        eng = _engine_for_bounded(dom) if not isinstance(dom, Ball) else ClosedFormEngine(dom)
        rep = kobayashi_fuks(eng, z)
        Ks.append(rep.K)
        Js.append(rep.J)
        gs.append(rep.gtilde_det)
        labels.append(repr(dom.config_dict()))
    eng_t = _engine_for_bounded(target) if not isinstance(target, Ball) else ClosedFormEngine(target)
    K_target = kobayashi_fuks(eng_t, z).K
    monotone = all(Ks[i] >= Ks[i + 1] - 1e-12 * abs(Ks[i]) for i in range(len(Ks) - 1))
    return ConvergenceTable(labels, Ks, Js, gs, K_target, monotone)


# ---------------------------------------------------------------------------
# Localization
# ---------------------------------------------------------------------------


@dataclass
class RatioTrace:
    distances: np.ndarray
    J_ratio: np.ndarray
    M_ratio: np.ndarray
    gtilde_ratio: np.ndarray
    degree: int
    nodes: int


def localization_ratio(
    domain: DomainSpec,
    center,
    radius: float,
    d_values,
    u=None,
    degree: int = 60,
    nodes: int = 1 << 18,
    seed: int = 0,
) -> RatioTrace:
    """Ratios J, M, det Gtilde between a domain and its intersection with a ball.

    Both engines share one polynomial subspace and one quadrature cloud: the
    basis is orthonormalized against the discrete measure on the intersection
    piece, so its Gram matrix there is the identity while the full-domain Gram
    is identity plus the (positive) contribution of the far points.  Shared
    nodes make the two inner products agree exactly near the vertex, which is
    what lets the ratio isolate the localization effect instead of quadrature
    noise.  If the intersection equals the domain the ratios are exactly 1.
    """
    center = as_point(center)
    lens = Intersection(domain, center, radius)
    ds = np.asarray(sorted(d_values, reverse=True), dtype=float)
    if ds.size == 0 or np.any(ds <= 0):
        raise ArgumentError("need positive evaluation distances")
    direction = inner_normal(domain, center)
    pts = [center + d * direction for d in ds]
    for z in pts:
        lens.require_interior(z)

    scheme = QuadratureScheme("qmc", nodes, seed)
    box = domain.bounding_box()
    X, w = scheme.points_and_weights(box)
    Z = X[:, 0::2] + 1j * X[:, 1::2]
    in_dom = domain.contains_batch(Z)
    in_lens = lens.contains_batch(Z)

    deg = degree
    while True:
        try:
            onb = OrthonormalizedBasis.from_points(Z[in_lens], w[in_lens], deg)
            break
        except ArgumentError:
            if deg <= 10:
                raise
            warnings.warn(f"orthonormalization failed at degree {deg}; retrying smaller")
            deg -= 10

    V_far = onb.values_batch(Z[in_dom & ~in_lens])
    S_dom = np.eye(len(onb), dtype=complex) + (V_far * w[in_dom & ~in_lens]) @ V_far.conj().T
    eng_lens = GramEngine(lens, onb, np.eye(len(onb), dtype=complex))
    eng_dom = GramEngine(domain, onb, S_dom)

    if u is None:
        u = np.zeros(domain.n, dtype=complex)
        u[0] = 1.0

    Jr, Mr, gr = [], [], []
    for z in pts:
        rep_d = kobayashi_fuks(eng_dom, z)
        rep_l = kobayashi_fuks(eng_lens, z)
        I_d = maximal_I(eng_dom, z, u).value
        I_l = maximal_I(eng_lens, z, u).value
        M_d = rep_d.K**domain.n * rep_d.J * I_d
        M_l = rep_l.K**domain.n * rep_l.J * I_l
        Jr.append(rep_d.J / rep_l.J)
        Mr.append(M_d / M_l)
        gr.append(rep_d.gtilde_det / rep_l.gtilde_det)
    return RatioTrace(ds, np.array(Jr), np.array(Mr), np.array(gr), deg, nodes)
