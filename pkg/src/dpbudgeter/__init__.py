"""dp-budgeter: allocate a global privacy budget across statistics and
release them with differential privacy.

Data owners set a global (epsilon, delta) budget, pick statistics (mean,
histogram, quantile, CDF), see a priori worst-case error at a chosen
confidence level, redistribute budget by editing error targets with holds
and an analyst reserve, and finalize into noisy releases. Raw data cells
stay behind a firewall until finalization.
"""

__version__ = "0.1.0"

from .accuracy import DEFAULT_ALPHA, ErrorEstimate, ErrorUnits, epsilon_for_error, error_bound
from .budget import (
    AllocationState,
    ParamVerdict,
    PrivacyBudget,
    SamplingInfo,
    VerdictStatus,
    amplify_by_sampling,
    compose,
    recommend_params,
    usable_budget,
    validate_params,
)
from .data import DatasetHandle, load_codebook, load_csv, open_for_finalize
from .mechanisms import clip_numeric, dp_cdf, dp_histogram, dp_mean, dp_quantile, sample_laplace
from .rng import RandomSource
from .session import (
    Release,
    Session,
    StatisticSpec,
    add_statistic,
    create_session,
    delete_statistic,
    error_table,
    finalize,
    load_session,
    save_session,
    session_view,
    set_confidence,
    set_error_target,
    set_reserve,
    toggle_hold,
    update_params,
)
from .variables import StatisticKind, VariableKind, VariableMetadata, VariableSchema, validate_metadata

__all__ = [
    "__version__",
    "DEFAULT_ALPHA",
    "AllocationState",
    "DatasetHandle",
    "ErrorEstimate",
    "ErrorUnits",
    "ParamVerdict",
    "PrivacyBudget",
    "RandomSource",
    "Release",
    "SamplingInfo",
    "Session",
    "StatisticKind",
    "StatisticSpec",
    "VariableKind",
    "VariableMetadata",
    "VariableSchema",
    "VerdictStatus",
    "add_statistic",
    "amplify_by_sampling",
    "clip_numeric",
    "compose",
    "create_session",
    "delete_statistic",
    "dp_cdf",
    "dp_histogram",
    "dp_mean",
    "dp_quantile",
    "epsilon_for_error",
    "error_bound",
    "error_table",
    "finalize",
    "load_codebook",
    "load_csv",
    "load_session",
    "open_for_finalize",
    "recommend_params",
    "sample_laplace",
    "save_session",
    "session_view",
    "set_confidence",
    "set_error_target",
    "set_reserve",
    "toggle_hold",
    "update_params",
    "usable_budget",
    "validate_metadata",
    "validate_params",
]
