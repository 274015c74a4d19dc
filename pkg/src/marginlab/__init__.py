"""Simulation lab for list-replicable learning of large-margin halfspaces."""

from .concepts import (
    STAR,
    LabeledSample,
    MarginDistribution,
    PartialHalfspace,
    TotalHalfspace,
    loss_exact_2d,
    loss_montecarlo,
)
from .errors import (
    ConfigError,
    DegenerateVectorError,
    DimensionMismatchError,
    InfeasibleSampleError,
    MarginLabError,
    NetConstructionError,
    SamplerStallError,
    SizeGuardError,
    UnsupportedDimensionError,
)
from .geometry import RngStream, inner, normalize, sample_uniform_sphere
from .learner import (
    LearnerConfig,
    LearnerOutput,
    mean_concentration_probe,
    run_learner,
    run_learner_many,
    select_batch_count,
    select_batch_size,
)
from .replicability import (
    BoostConfig,
    FiniteDomainDistribution,
    FiniteHypothesis,
    ReplicabilityReport,
    cover_multiplicity_probe,
    estimate_global_stability,
    estimate_list,
    stability_boost,
)
from .rounding import (
    SphereNet,
    build_net,
    check_general_position,
    load_net,
    round_to_net,
    save_net,
    verify_covering,
)
from .svm import SvmSolution, hard_svm, separates_with_margin, svm_by_enumeration

__version__ = "0.1.0"

__all__ = [
    "STAR",
    "BoostConfig",
    "ConfigError",
    "DegenerateVectorError",
    "DimensionMismatchError",
    "FiniteDomainDistribution",
    "FiniteHypothesis",
    "InfeasibleSampleError",
    "LabeledSample",
    "LearnerConfig",
    "LearnerOutput",
    "MarginDistribution",
    "MarginLabError",
    "NetConstructionError",
    "PartialHalfspace",
    "ReplicabilityReport",
    "RngStream",
    "SamplerStallError",
    "SizeGuardError",
    "SphereNet",
    "SvmSolution",
    "TotalHalfspace",
    "UnsupportedDimensionError",
    "build_net",
    "check_general_position",
    "cover_multiplicity_probe",
    "estimate_global_stability",
    "estimate_list",
    "hard_svm",
    "inner",
    "load_net",
    "loss_exact_2d",
    "loss_montecarlo",
    "mean_concentration_probe",
    "normalize",
    "round_to_net",
    "run_learner",
    "run_learner_many",
    "sample_uniform_sphere",
    "save_net",
    "select_batch_count",
    "select_batch_size",
    "separates_with_margin",
    "stability_boost",
    "svm_by_enumeration",
    "verify_covering",
]
