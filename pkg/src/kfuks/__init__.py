"""Bergman and Kobayashi-Fuks metrics on domains in C^n.

Pointwise invariant stacks (kernel, metric, Ricci, Kobayashi-Fuks, canonical
invariant, extremal domain functions) plus harnesses that verify their
boundary scaling limits against model-domain references.
"""

from .domains import (
    Ball,
    Biholomorphism,
    BumpedModel,
    Cone,
    Defining,
    DomainSpec,
    Egg,
    Intersection,
    Model,
    Polydisc,
    ReinhardtMoment,
    WeightedPolynomial,
    Weights,
    abs2m_polynomial,
    boundary_distance,
    bounded_representative,
    cone_samples,
    dilate,
    is_weighted_homogeneous,
    levi_psd_check,
    model_to_bounded,
    norm2_polynomial,
    validate_bumping,
)
from .quadrature import MomentTable, QuadratureScheme, gram_matrix, reinhardt_moments
from .bergman import (
    ClosedFormEngine,
    GramEngine,
    KernelEngine,
    KernelJet,
    PullbackEngine,
    SeriesEngine,
    kernel_eval,
    kernel_jet,
    make_engine,
    min_integral_I0,
    min_integral_I1,
)
from .metrics import (
    ExtremalResult,
    MetricReport,
    bergman_metric,
    kf_via_extremal,
    kobayashi_fuks,
    maximal_I,
    maximal_M,
    pullback_report,
    ricci,
)
from .asymptotics import (
    ModelReference,
    RaySequence,
    inside_convergence,
    limiting_direction,
    localization_ratio,
    model_reference,
    richardson_extrapolate,
    scaled_kernel_and_J,
    scaled_kf_det,
    scaled_kf_length,
    stability_sweep,
)

__version__ = "0.1.0"
