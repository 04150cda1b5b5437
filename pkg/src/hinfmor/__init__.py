"""Reduced-order modeling of SISO descriptor systems with a peak-gain target.

The main entry point is :func:`reduce_hinf`, which interpolates the full
model at optimally chosen points and then tunes the reduced feed-through
term against a data-driven surrogate of the error system.  Supporting
machinery (interpolatory projection, shift iteration, Loewner surrogates,
norm computations, balanced-truncation baselines, synthetic benchmarks,
Matrix Market I/O, and a batch job runner) is exported here as well.
"""

__version__ = "0.1.0"

from .baselines import BtResult, MbtResult, balanced_truncation, modified_bt
from .errors import (
    DegenerateDenominator,
    DimensionMismatch,
    DimensionTooLarge,
    DuplicatePoints,
    FamilyPole,
    NonProper,
    NoStableFeedthrough,
    NotConjugateClosed,
    ParseError,
    RankDeficient,
    ReductionError,
    RepeatedPoles,
    SingularMassMatrix,
    SingularReducedPencil,
    SingularShift,
    SingularSurrogatePencil,
    UnstableSystem,
)
from .feedthrough import FeedthroughFamily
from .irka import IrkaConfig, IrkaResult, check_h2_conditions, run_irka
from .jobs import Job, JobResult, ingest, run_job, write_system
from .loewner import (
    LoewnerPencil,
    Surrogate,
    build_pencil,
    check_rank_condition,
    dedupe_samples,
    extract_surrogate,
    surrogate_error_report,
)
from .norms import (
    ErrorBound,
    HankelSpectrum,
    HinfNorm,
    error_realization,
    gramian_factors,
    h2_norm,
    hankel_singular_values,
    hinf_norm,
    hinf_norm_sampled,
    relative_error_and_bound,
)
from .pipeline import (
    BracketPolicy,
    EquiDiagnostics,
    HinfReduction,
    HinfReductionConfig,
    equioscillation_diagnostics,
    optimize_feedthrough,
    reduce_hinf,
)
from .projection import InterpolationBasis, ReducedModel, build_basis, project, realify
from .statespace import FrequencyGrid, LtiSystem, TransferSample
from .synthetic import make_synthetic

__all__ = [
    "__version__",
    "BtResult",
    "MbtResult",
    "balanced_truncation",
    "modified_bt",
    "DegenerateDenominator",
    "DimensionMismatch",
    "DimensionTooLarge",
    "DuplicatePoints",
    "FamilyPole",
    "NonProper",
    "NoStableFeedthrough",
    "NotConjugateClosed",
    "ParseError",
    "RankDeficient",
    "ReductionError",
    "RepeatedPoles",
    "SingularMassMatrix",
    "SingularReducedPencil",
    "SingularShift",
    "SingularSurrogatePencil",
    "UnstableSystem",
    "FeedthroughFamily",
    "IrkaConfig",
    "IrkaResult",
    "check_h2_conditions",
    "run_irka",
    "Job",
    "JobResult",
    "ingest",
    "run_job",
    "write_system",
    "LoewnerPencil",
    "Surrogate",
    "build_pencil",
    "check_rank_condition",
    "dedupe_samples",
    "extract_surrogate",
    "surrogate_error_report",
    "ErrorBound",
    "HankelSpectrum",
    "HinfNorm",
    "error_realization",
    "gramian_factors",
    "h2_norm",
    "hankel_singular_values",
    "hinf_norm",
    "hinf_norm_sampled",
    "relative_error_and_bound",
    "BracketPolicy",
    "EquiDiagnostics",
    "HinfReduction",
    "HinfReductionConfig",
    "equioscillation_diagnostics",
    "optimize_feedthrough",
    "reduce_hinf",
    "InterpolationBasis",
    "ReducedModel",
    "build_basis",
    "project",
    "realify",
    "FrequencyGrid",
    "LtiSystem",
    "TransferSample",
    "make_synthetic",
]
