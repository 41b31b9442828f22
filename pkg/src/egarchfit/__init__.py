"""EGARCH(1,1) simulation, invertibility diagnostics, and stable QML estimation."""

from .errors import (
    EgarchError,
    EmptyFeasibleSetError,
    IdentifiabilityError,
    InadmissibleParamsError,
    MissingLatentStateError,
    NonFiniteValueError,
    NonStationaryError,
    OverflowGuardError,
    ParseError,
    SingularBError,
    TooShortError,
)
from .estimation import (
    CovarianceReport,
    FitResult,
    ParameterBox,
    QLEvaluation,
    asymptotic_covariance,
    fit,
    quasi_likelihood,
    ql_with_derivatives,
    score_at_truth,
    score_path_at_truth,
)
from .estimator import EgarchEstimator
from .experiments import (
    DomainGrid,
    MCStudyReport,
    consistency_study,
    domain_map,
    forecast,
    normality_study,
    population_mm,
)
from .inversion import (
    FilterPath,
    LyapunovReport,
    StabilityTable,
    check_inv_empirical,
    check_inv_theoretical,
    filter_series,
    find_nonforgetting_point,
    lipschitz_coeff,
    log_decay_fit,
    stability_diagnostic,
)
from .model import (
    InnovationSpec,
    ModelParams,
    SeriesSample,
    ma_infinity_log_var,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "CovarianceReport",
    "DomainGrid",
    "EgarchError",
    "EgarchEstimator",
    "EmptyFeasibleSetError",
    "FilterPath",
    "FitResult",
    "IdentifiabilityError",
    "InadmissibleParamsError",
    "InnovationSpec",
    "LyapunovReport",
    "MCStudyReport",
    "MissingLatentStateError",
    "ModelParams",
    "NonFiniteValueError",
    "NonStationaryError",
    "OverflowGuardError",
    "ParameterBox",
    "ParseError",
    "QLEvaluation",
    "SeriesSample",
    "SingularBError",
    "StabilityTable",
    "TooShortError",
    "asymptotic_covariance",
    "check_inv_empirical",
    "check_inv_theoretical",
    "consistency_study",
    "domain_map",
    "filter_series",
    "find_nonforgetting_point",
    "fit",
    "forecast",
    "lipschitz_coeff",
    "log_decay_fit",
    "ma_infinity_log_var",
    "normality_study",
    "population_mm",
    "ql_with_derivatives",
    "quasi_likelihood",
    "score_at_truth",
    "score_path_at_truth",
    "simulate",
    "stability_diagnostic",
]
