"""A priori worst-case error bounds and their exact inverses.

Each bound holds with probability at least 1 - alpha and never looks at
data, only at metadata, the public row count and the privacy loss. All
bounds have the form C / epsilon with C independent of epsilon:

* mean:      (upper - lower) * ln(1/alpha) / (n * epsilon), statistic units
             (exact Laplace tail at scale (upper - lower) / (n * epsilon))
* histogram: (2 / epsilon) * ln(1/alpha) per bin, in counts
* quantile:  (2 / (epsilon * n)) * ln(G/alpha), in quantile fraction
             (exponential-mechanism utility bound over G cells)
* cdf:       (2G / (epsilon * n)) * ln(G/alpha) per grid point, a union
             bound over the G per-bin noises, deliberately conservative

so error -> epsilon is the same division the other way around.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .variables import StatisticKind, VariableMetadata, resolve_grid

DEFAULT_ALPHA = 0.05


class ErrorUnits(str, Enum):
    STATISTIC = "statistic"
    COUNT = "count"
    QUANTILE_FRACTION = "quantile_fraction"
    CDF_FRACTION = "cdf_fraction"


UNITS_BY_KIND: dict[StatisticKind, ErrorUnits] = {
    StatisticKind.MEAN: ErrorUnits.STATISTIC,
    StatisticKind.HISTOGRAM: ErrorUnits.COUNT,
    StatisticKind.QUANTILE: ErrorUnits.QUANTILE_FRACTION,
    StatisticKind.CDF: ErrorUnits.CDF_FRACTION,
}


@dataclass(frozen=True)
class ErrorEstimate:
    """Worst-case error at confidence 1 - alpha, in kind-specific units."""

    value: float
    units: ErrorUnits
    alpha: float


def check_alpha(alpha: float) -> float:
    if not (isinstance(alpha, (int, float)) and 0.0 < alpha <= 0.5):
        raise ValueError(f"confidence parameter alpha must lie in (0, 0.5], got {alpha!r}")
    return float(alpha)


def error_coefficient(
    kind: StatisticKind, meta: VariableMetadata, n: int, alpha: float
) -> float:
    """The C in bound = C / epsilon for the given statistic configuration."""
    check_alpha(alpha)
    if n < 1:
        raise ValueError("error bounds need at least one data row")
    if kind is StatisticKind.MEAN:
        return meta.width * math.log(1.0 / alpha) / n
    if kind is StatisticKind.HISTOGRAM:
        return 2.0 * math.log(1.0 / alpha)
    grid = resolve_grid(kind, meta)
    if kind is StatisticKind.QUANTILE:
        return (2.0 / n) * math.log(grid / alpha)
    if kind is StatisticKind.CDF:
        return (2.0 * grid / n) * math.log(grid / alpha)
    raise ValueError(f"unknown statistic kind {kind!r}")


def error_bound(
    kind: StatisticKind,
    meta: VariableMetadata,
    n: int,
    epsilon: float,
    alpha: float = DEFAULT_ALPHA,
) -> ErrorEstimate:
    """Worst-case error at confidence 1 - alpha for a given privacy loss."""
    if not (math.isfinite(epsilon) and epsilon > 0):
        raise ValueError(f"epsilon must be positive and finite, got {epsilon!r}")
    value = error_coefficient(kind, meta, n, alpha) / epsilon
    return ErrorEstimate(value=value, units=UNITS_BY_KIND[kind], alpha=float(alpha))


def epsilon_for_error(
    kind: StatisticKind,
    meta: VariableMetadata,
    n: int,
    target: float,
    alpha: float = DEFAULT_ALPHA,
) -> float:
    """Exact algebraic inverse of ``error_bound`` in its first argument."""
    if not (isinstance(target, (int, float)) and math.isfinite(target) and target > 0):
        raise ValueError(f"target error must be positive and finite, got {target!r}")
    return error_coefficient(kind, meta, n, alpha) / float(target)
