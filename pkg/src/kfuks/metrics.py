"""Pointwise invariants of the Bergman kernel.

From a kernel engine this module assembles, at an interior point z:

* K, the kernel diagonal, and the Bergman metric matrix G (from analytic jets);
* the Ricci tensor of the Bergman metric, by Richardson-extrapolated central
  differences of log det G over the underlying real coordinates;
* the matrix Gtilde = (n+1) G - Ric, its determinant, the canonical invariant
  J = det G / K, and the product T = K^(2n) J det(Gtilde);
* the extremal quantities I and M over a Gram engine (vanishing 1-jet,
  unit norm, second-jet Rayleigh data), which give the same metric length
  through I/K -- the module's central cross-validation;
* the transformation of full reports under biholomorphisms.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .bergman import GramEngine, KernelEngine, KernelJet, kernel_jet
from .domains import Biholomorphism, as_point, boundary_distance
from .errors import (
    ArgumentError,
    DegenerateMetricError,
    InfeasibleError,
    StepTooLargeError,
)

__all__ = [
    "MetricReport",
    "ExtremalResult",
    "bergman_metric",
    "ricci",
    "kobayashi_fuks",
    "maximal_I",
    "maximal_M",
    "kf_via_extremal",
    "pullback_report",
    "hermitian_quadratic",
]

PD_TRACE_TOL = 1e-8


def hermitian_quadratic(M: np.ndarray, u) -> float:
    """sum M[a, b] u_a conj(u_b), real for Hermitian M."""
    u = as_point(u)
    return float(np.real(u @ M @ np.conj(u)))


def _assert_pd(M: np.ndarray, name: str):
    lam = np.linalg.eigvalsh(0.5 * (M + M.conj().T))
    tol = PD_TRACE_TOL * max(float(np.trace(M).real), 1e-300)
    if lam.min() <= tol:
        raise DegenerateMetricError(
            f"{name} is not positive definite (min eigenvalue {lam.min():.3e})"
        )


@dataclass
class MetricReport:
    """All pointwise invariants at z.  Matrices are Hermitian n x n."""

    z: np.ndarray
    n: int
    K: float
    G: np.ndarray
    Ric: np.ndarray
    Gtilde: np.ndarray
    J: float
    gtilde_det: float
    T: float
    diagnostics: dict = field(default_factory=dict)

    def bergman_length(self, u) -> float:
        return math.sqrt(hermitian_quadratic(self.G, u))

    def kf_length(self, u) -> float:
        return math.sqrt(hermitian_quadratic(self.Gtilde, u))

    def ricci_curvature(self, u) -> float:
        return hermitian_quadratic(self.Ric, u) / hermitian_quadratic(self.G, u)

    def to_json_dict(self) -> dict:
        def mat(M):
            return {"re": np.real(M).tolist(), "im": np.imag(M).tolist()}

        return {
            "z": [[zj.real, zj.imag] for zj in self.z],
            "n": self.n,
            "K": self.K,
            "G": mat(self.G),
            "Ric": mat(self.Ric),
            "Gtilde": mat(self.Gtilde),
            "J": self.J,
            "gtilde_det": self.gtilde_det,
            "T": self.T,
            "diagnostics": self.diagnostics,
        }

    def matrices_to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["matrix", "row", "col", "re", "im"])
            for name, M in (("G", self.G), ("Ric", self.Ric), ("Gtilde", self.Gtilde)):
                for i in range(self.n):
                    for j in range(self.n):
                        w.writerow([name, i, j, M[i, j].real, M[i, j].imag])


@dataclass
class ExtremalResult:
    value: float
    coefficients: np.ndarray
    constraint_residual: float
    norm_residual: float
    eigenvalues: np.ndarray


# ---------------------------------------------------------------------------
# Differential pipeline
# ---------------------------------------------------------------------------


def bergman_metric(jet: KernelJet):
    """K, the metric matrix G = (K ddbar K - dK dbar K)/K^2, and u -> B(z, u)."""
    if jet.max_order < 2:
        raise ArgumentError("metric needs a jet of order >= 2")
    K = jet.K
    dK = jet.gradient()
    H = jet.mixed_hessian()
    G = (K * H - np.outer(dK, np.conj(dK))) / K**2
    G = 0.5 * (G + G.conj().T)
    _assert_pd(G, "Bergman metric")

    def length(u):
        return math.sqrt(hermitian_quadratic(G, u))

    return K, G, length


def _metric_at(engine: KernelEngine, z: np.ndarray) -> np.ndarray:
    _, G, _ = bergman_metric(engine.jet(z, 2))
    return G


def _log_det_G(engine: KernelEngine, z: np.ndarray) -> float:
    G = _metric_at(engine, z)
    det = float(np.real(np.linalg.det(G)))
    if det <= 0:
        raise DegenerateMetricError(f"det G <= 0 at {z}")
    return math.log(det)


def _direction_curvature(engine, z, v, h) -> float:
    """d^2/dt dtbar of log det G along z + t v, central 4-point stencil."""
    pts = [z + h * v, z - h * v, z + 1j * h * v, z - 1j * h * v]
    s = sum(_log_det_G(engine, p) for p in pts) - 4.0 * _log_det_G(engine, z)
    return s / (4.0 * h * h)


def _hessian_fd(engine, z, h) -> np.ndarray:
    n = engine.n
    H = np.zeros((n, n), dtype=complex)
    units = np.eye(n, dtype=complex)
    for a in range(n):
        H[a, a] = _direction_curvature(engine, z, units[a], h)
    for a in range(n):
        for b in range(a + 1, n):
            ea, eb = units[a], units[b]
            Lpp = _direction_curvature(engine, z, ea + eb, h)
            Lpm = _direction_curvature(engine, z, ea - eb, h)
            Lip = _direction_curvature(engine, z, ea + 1j * eb, h)
            Lim = _direction_curvature(engine, z, ea - 1j * eb, h)
            H[a, b] = 0.25 * (Lpp - Lpm) + 0.25j * (Lip - Lim)
            H[b, a] = np.conj(H[a, b])
    return H


def default_fd_step(engine: KernelEngine, z) -> float:
    """1e-3 of the boundary distance, so stencils stay interior and resolved."""
    try:
        d = boundary_distance(engine.domain, z)
    except Exception:
        d = 1.0
    return 1e-3 * max(d, 1e-12)


def ricci(engine: KernelEngine, z, h: float | None = None):
    """Ricci tensor of the Bergman metric by Richardson-extrapolated FD.

    Returns (Ric matrix, curvature function u -> Ric(z, u), Kobayashi margin
    function u -> (n+1) - Ric(z, u)).  Steps h and h/2 are combined to fourth
    order.  Raises if the stencil leaves the domain.
    """
    z = as_point(z)
    engine.domain.require_interior(z)
    if h is None:
        h = default_fd_step(engine, z)
    span = 2 * h * math.sqrt(2)
    corners = []
    for a in range(engine.n):
        for s in (1, -1, 1j, -1j):
            e = np.zeros(engine.n, dtype=complex)
            e[a] = 1
            corners.append(z + span * s * e)
    if not all(engine.domain.contains(p) for p in corners):
        raise StepTooLargeError(f"FD stencil of half-width {span:.2e} exits the domain")

    H_h = _hessian_fd(engine, z, h)
    H_h2 = _hessian_fd(engine, z, h / 2)
    H = (4.0 * H_h2 - H_h) / 3.0
    Ric = -0.5 * (H + H.conj().T)
    G = _metric_at(engine, z)

    def curvature(u):
        return hermitian_quadratic(Ric, u) / hermitian_quadratic(G, u)

    def kobayashi_margin(u):
        return (engine.n + 1) - curvature(u)

    return Ric, curvature, kobayashi_margin


def kobayashi_fuks(engine: KernelEngine, z, h: float | None = None) -> MetricReport:
    """Full invariant stack at z from the differential pipeline."""
    z = as_point(z)
    jet = kernel_jet(engine, z, 2)
    K, G, _ = bergman_metric(jet)
    if h is None:
        h = default_fd_step(engine, z)
    Ric, _, _ = ricci(engine, z, h)
    n = engine.n
    Gt = (n + 1) * G - Ric
    Gt = 0.5 * (Gt + Gt.conj().T)
    _assert_pd(Gt, "Kobayashi-Fuks matrix")
    detG = float(np.real(np.linalg.det(G)))
    gtilde = float(np.real(np.linalg.det(Gt)))
    J = detG / K
    T = K ** (2 * n) * J * gtilde
    diag = {
        "fd_step": h,
        "richardson": [h, h / 2],
        "cond_G": float(np.linalg.cond(G)),
        "cond_Gtilde": float(np.linalg.cond(Gt)),
        "provenance": jet.provenance,
    }
    return MetricReport(z, n, K, G, Ric, Gt, J, gtilde, T, diag)


# ---------------------------------------------------------------------------
# Extremal pipeline
# ---------------------------------------------------------------------------


def maximal_I(engine: GramEngine, z, u) -> ExtremalResult:
    """Second-jet extremal quantity over functions with vanishing 1-jet.

    The quadratic data q(f) = (f''(z) u)^H G^-1 (f''(z) u) is restricted to
    {f : f(z) = 0, f'(z) = 0, ||f|| = 1}.  The reported value is the sum of
    the nonzero generalized eigenvalues of the pencil (q, norm) on that
    subspace -- the normalization under which I/K is the squared
    Kobayashi-Fuks length; each eigenvalue is nondecreasing in the basis.
    """
    z, u = as_point(z), as_point(u)
    engine.domain.require_interior(z)
    if not np.any(u != 0):
        return ExtremalResult(0.0, np.zeros(len(engine.basis), complex), 0.0, 0.0, np.zeros(0))
    G = _metric_at(engine, z)
    C = engine.constraint_rows(z)
    Z = engine.constrained_null_basis(C)
    W = engine.second_derivative_map(z, u)
    What = W @ Z
    Ginv_What = np.linalg.solve(G, What)
    A = What.conj().T @ Ginv_What
    A = 0.5 * (A + A.conj().T)
    lam, vecs = np.linalg.eigh(A)
    lam = lam[::-1]
    vecs = vecs[:, ::-1]
    positive = lam[lam > max(lam.max(), 0) * 1e-13] if lam.size else np.zeros(0)
    value = float(lam[lam > 0].sum()) if lam.size else 0.0
    if lam.size == 0 or lam.max() <= 0:
        raise InfeasibleError("constrained space carries no second-jet mass")
    coeffs = Z @ vecs[:, 0]
    resid = float(np.linalg.norm(C @ coeffs))
    norm_resid = abs(float(np.real(coeffs.conj() @ engine.S @ coeffs)) - 1.0)
    return ExtremalResult(value, coeffs, resid, norm_resid, positive)


def maximal_M(engine: GramEngine, z, u) -> ExtremalResult:
    """M = K^n J I; monotonically decreasing under domain inclusion."""
    res = maximal_I(engine, z, u)
    jet = kernel_jet(engine, as_point(z), 2)
    K, G, _ = bergman_metric(jet)
    J = float(np.real(np.linalg.det(G))) / K
    value = K**engine.n * J * res.value
    return ExtremalResult(value, res.coefficients, res.constraint_residual,
                          res.norm_residual, res.eigenvalues)


def kf_via_extremal(engine: GramEngine, z, u) -> float:
    """Kobayashi-Fuks length of u at z computed as sqrt(I/K).

    Cross-validates the differential pipeline: agrees with
    kobayashi_fuks(engine, z).kf_length(u) within combined tolerances.
    """
    res = maximal_I(engine, z, u)
    K = float(np.real(engine.kernel(as_point(z), as_point(z))))
    return math.sqrt(res.value / K)


# ---------------------------------------------------------------------------
# Transformation rules
# ---------------------------------------------------------------------------


def pullback_report(report: MetricReport, phi: Biholomorphism, z) -> MetricReport:
    """Transport a report at phi(z) on the target to the point z on the source.

    K picks up |det phi'|^2; G, Ric, Gtilde conjugate by the Jacobian; J is
    invariant; det Gtilde scales by |det phi'|^2; T by |det phi'|^(2(2n+1)).
    """
    z = as_point(z)
    F = phi.jacobian(z)
    det = complex(np.linalg.det(F))
    if det == 0:
        raise ArgumentError("singular Jacobian")
    w = phi(z)
    if np.linalg.norm(w - report.z) > 1e-9 * (1 + np.linalg.norm(w)):
        raise ArgumentError("report was not computed at phi(z)")
    a2 = abs(det) ** 2
    n = report.n
    K = report.K * a2
    G = F.T @ report.G @ np.conj(F)
    Ric = F.T @ report.Ric @ np.conj(F)
    Gt = F.T @ report.Gtilde @ np.conj(F)
    gtilde = report.gtilde_det * a2
    T = report.T * a2 ** (2 * n + 1)
    diag = dict(report.diagnostics)
    diag["pulled_back_through"] = phi.name
    return MetricReport(z, n, K, 0.5 * (G + G.conj().T), 0.5 * (Ric + Ric.conj().T),
                        0.5 * (Gt + Gt.conj().T), report.J, gtilde, T, diag)


def transform_M(value: float, phi: Biholomorphism, z, n: int) -> float:
    """M on the source at z from M on the target at (phi(z), phi'(z) u)."""
    det = abs(phi.det_jacobian(z))
    return value * det ** (2 * (n + 1))


def report_to_json(report: MetricReport) -> str:
    return json.dumps(report.to_json_dict(), sort_keys=True)
