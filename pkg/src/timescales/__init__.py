"""Cox proportional-hazards analysis under alternative time scales.

Fits the same cohort on the time-on-study scale (optionally adjusted for
entry age), the unadjusted age scale, and the left-truncated age scale;
estimates Breslow cumulative baseline hazards with a log-linearity
diagnostic; tests coefficient differences between scales with a paired
bootstrap; and generates synthetic cohorts with known ground truth.
"""

from .baseline import (
    CumulativeHazard,
    ExponentialityReport,
    breslow_cumulative_hazard,
    exponentiality_diagnostic,
    nelson_aalen,
)
from .bootstrap import ComparisonResult, compare_models, paired_bootstrap, resample_indices
from .cohort import (
    Cohort,
    RiskSetEntry,
    RiskSetSequence,
    SubjectRecord,
    TimeScale,
    build_risk_sets,
    pearson_correlation,
    validate_cohort,
)
from .coxfit import (
    CoxFit,
    FitOptions,
    ModelSpec,
    fit_cox,
    model_preset,
    partial_log_likelihood,
    score_and_information,
)
from .io import read_cohort_csv, write_cohort_csv, write_hazard_tsv
from .simulate import (
    GeneratorParams,
    Gompertz,
    Weibull,
    default_params,
    event_age,
    generate_cohort,
    gompertz_event_age,
    weibull_event_age,
)

__version__ = "0.1.0"

__all__ = [
    "Cohort",
    "ComparisonResult",
    "CoxFit",
    "CumulativeHazard",
    "ExponentialityReport",
    "FitOptions",
    "GeneratorParams",
    "Gompertz",
    "ModelSpec",
    "RiskSetEntry",
    "RiskSetSequence",
    "SubjectRecord",
    "TimeScale",
    "Weibull",
    "breslow_cumulative_hazard",
    "build_risk_sets",
    "compare_models",
    "default_params",
    "event_age",
    "exponentiality_diagnostic",
    "fit_cox",
    "generate_cohort",
    "gompertz_event_age",
    "model_preset",
    "nelson_aalen",
    "paired_bootstrap",
    "partial_log_likelihood",
    "pearson_correlation",
    "read_cohort_csv",
    "resample_indices",
    "score_and_information",
    "validate_cohort",
    "weibull_event_age",
    "write_cohort_csv",
    "write_hazard_tsv",
    "__version__",
]
