"""Exception types shared across the budgeting engine.

Every error carries a stable machine-readable ``code`` plus an HTTP status
so the service layer and the CLI can surface failures uniformly. Extra
structured context (e.g. the best achievable error for an infeasible
target) travels in ``details``.
"""

from __future__ import annotations

from typing import Any


class BudgeterError(Exception):
    code = "ERROR"
    http_status = 400

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.details = details


class ParametersRejected(BudgeterError):
    """Privacy-loss parameters failed validation at the reject level."""

    code = "PARAMS_REJECTED"
    http_status = 422


class WarningsNotAcknowledged(BudgeterError):
    """Parameters triggered warnings that the caller has not acknowledged."""

    code = "WARNINGS_NOT_ACKNOWLEDGED"
    http_status = 409


class InfeasibleAllocation(BudgeterError):
    """The requested allocation cannot fit inside the usable budget."""

    code = "INFEASIBLE_ALLOCATION"
    http_status = 409


class InfeasibleTarget(BudgeterError):
    """An error target needs more budget than remains available."""

    code = "INFEASIBLE_TARGET"
    http_status = 409


class HeldStatisticError(BudgeterError):
    code = "HELD_STATISTIC"
    http_status = 409


class UnknownStatisticError(BudgeterError):
    code = "UNKNOWN_STATISTIC"
    http_status = 404


class UnknownSessionError(BudgeterError):
    code = "UNKNOWN_SESSION"
    http_status = 404


class PhaseError(BudgeterError):
    """Operation not allowed in the session's current phase."""

    code = "SESSION_FINALIZED"
    http_status = 409


class MetadataError(BudgeterError):
    code = "INVALID_METADATA"
    http_status = 422


class IncompatibleKindError(BudgeterError):
    code = "INCOMPATIBLE_KIND"
    http_status = 422


class IngestError(BudgeterError):
    code = "INGEST_ERROR"
    http_status = 422


class DigestMismatchError(BudgeterError):
    code = "DIGEST_MISMATCH"
    http_status = 409


class PopulationError(BudgeterError):
    code = "POPULATION_INVALID"
    http_status = 422


class FirewallError(BudgeterError):
    code = "FIREWALL"
    http_status = 409


class EmptyDatasetError(BudgeterError):
    code = "EMPTY_DATASET"
    http_status = 422


class NoStatisticsError(BudgeterError):
    code = "NO_STATISTICS"
    http_status = 409


class TierError(BudgeterError):
    """Sensitivity tier for which no parameter preset is offered."""

    code = "TIER_UNSUPPORTED"
    http_status = 422
